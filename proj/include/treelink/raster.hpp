#pragma once

#include <string>
#include <vector>

#include "treelink/geometry.hpp"

namespace treelink {

// Row-major covariate grid in the plain-text ASC layout: the first value row
// is the northernmost (top) row.
struct Raster {
  int ncols = 0;
  int nrows = 0;
  double xll = 0.0;   // lower-left corner
  double yll = 0.0;
  double cellsize = 1.0;
  double nodata = -9999.0;
  std::vector<double> values;

  double& at(int row, int col) { return values[static_cast<std::size_t>(row) * ncols + col]; }
  double at(int row, int col) const { return values[static_cast<std::size_t>(row) * ncols + col]; }
  bool is_nodata(double v) const { return v == nodata; }
  Domain extent() const {
    return {xll, yll, xll + ncols * cellsize, yll + nrows * cellsize};
  }
  void validate() const;
};

// 6-line header (ncols, nrows, xllcorner, yllcorner, cellsize, NODATA_value)
// followed by whitespace-separated row-major values.
Raster read_raster_asc(const std::string& path);
void write_raster_asc(const std::string& path, const Raster& raster);

// Value of the cell containing p; cells are half-open [x, x+cellsize) in both
// axes. Outside the extent or on a no-data cell throws CovariateUnavailable.
double sample_raster(const Raster& raster, Point2 p);

struct CovariateScale {
  double mean = 0.0;
  double sd = 1.0;
};

// Center and scale each raster in place using the mean and (count-1)-
// denominator SD over cells whose centers lie in `domain`, excluding no-data.
// Throws DegenerateCovariate on zero variance.
std::vector<CovariateScale> standardize_covariates(std::vector<Raster>& rasters,
                                                   const Domain& domain);

}  // namespace treelink
