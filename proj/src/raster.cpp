#include "treelink/raster.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "treelink/errors.hpp"

namespace treelink {

void Raster::validate() const {
  if (ncols <= 0 || nrows <= 0) {
    throw Error(ErrorCode::ValidationError, "raster dimensions must be positive");
  }
  if (!(cellsize > 0.0)) {
    throw Error(ErrorCode::ValidationError, "raster cellsize must be positive");
  }
  if (values.size() != static_cast<std::size_t>(ncols) * nrows) {
    throw Error(ErrorCode::ValidationError, "raster value count does not match dimensions");
  }
}

Raster read_raster_asc(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  Raster r;
  const char* keys[6] = {"ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "NODATA_value"};
  double header_vals[6];
  for (int i = 0; i < 6; ++i) {
    std::string key;
    if (!(in >> key >> header_vals[i]) || key != keys[i]) {
      throw Error(ErrorCode::SchemaError,
                  path + ": header line " + std::to_string(i + 1) + " must be '" +
                      keys[i] + " <value>'");
    }
  }
  r.ncols = static_cast<int>(header_vals[0]);
  r.nrows = static_cast<int>(header_vals[1]);
  r.xll = header_vals[2];
  r.yll = header_vals[3];
  r.cellsize = header_vals[4];
  r.nodata = header_vals[5];
  if (r.ncols <= 0 || r.nrows <= 0 || !(r.cellsize > 0.0)) {
    throw Error(ErrorCode::ValidationError, path + ": invalid raster header");
  }
  r.values.resize(static_cast<std::size_t>(r.ncols) * r.nrows);
  for (auto& v : r.values) {
    if (!(in >> v)) throw Error(ErrorCode::ParseError, path + ": truncated raster values");
  }
  return r;
}

void write_raster_asc(const std::string& path, const Raster& raster) {
  raster.validate();
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ValidationError, "cannot write " + path);
  out.precision(17);
  out << "ncols " << raster.ncols << "\n"
      << "nrows " << raster.nrows << "\n"
      << "xllcorner " << raster.xll << "\n"
      << "yllcorner " << raster.yll << "\n"
      << "cellsize " << raster.cellsize << "\n"
      << "NODATA_value " << raster.nodata << "\n";
  for (int row = 0; row < raster.nrows; ++row) {
    for (int col = 0; col < raster.ncols; ++col) {
      out << raster.at(row, col) << (col + 1 == raster.ncols ? '\n' : ' ');
    }
  }
}

double sample_raster(const Raster& raster, Point2 p) {
  const int col = static_cast<int>(std::floor((p.x - raster.xll) / raster.cellsize));
  const int row_from_bottom = static_cast<int>(std::floor((p.y - raster.yll) / raster.cellsize));
  if (col < 0 || col >= raster.ncols || row_from_bottom < 0 || row_from_bottom >= raster.nrows) {
    throw Error(ErrorCode::CovariateUnavailable,
                "point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                    ") outside raster extent");
  }
  const int row = raster.nrows - 1 - row_from_bottom;
  const double v = raster.at(row, col);
  if (raster.is_nodata(v)) {
    throw Error(ErrorCode::CovariateUnavailable,
                "no-data cell at (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")");
  }
  return v;
}

std::vector<CovariateScale> standardize_covariates(std::vector<Raster>& rasters,
                                                   const Domain& domain) {
  std::vector<CovariateScale> scales;
  scales.reserve(rasters.size());
  for (Raster& r : rasters) {
    r.validate();
    // Two-pass moments so the standardized surface is centered to ~1e-15.
    std::vector<double> in_domain;
    for (int row = 0; row < r.nrows; ++row) {
      for (int col = 0; col < r.ncols; ++col) {
        const double v = r.at(row, col);
        if (r.is_nodata(v)) continue;
        const Point2 center{r.xll + (col + 0.5) * r.cellsize,
                            r.yll + (r.nrows - 1 - row + 0.5) * r.cellsize};
        if (!domain.contains(center)) continue;
        in_domain.push_back(v);
      }
    }
    const long count = static_cast<long>(in_domain.size());
    if (count < 2) {
      throw Error(ErrorCode::DegenerateCovariate,
                  "fewer than two valid raster cells inside the domain");
    }
    double sum = 0.0;
    for (double v : in_domain) sum += v;
    const double mean = sum / count;
    double ss = 0.0;
    for (double v : in_domain) ss += (v - mean) * (v - mean);
    const double var = ss / (count - 1);
    if (!(var > 0.0)) {
      throw Error(ErrorCode::DegenerateCovariate, "constant covariate raster");
    }
    const double sd = std::sqrt(var);
    for (double& v : r.values) {
      if (!r.is_nodata(v)) v = (v - mean) / sd;
    }
    scales.push_back({mean, sd});
  }
  return scales;
}

}  // namespace treelink
