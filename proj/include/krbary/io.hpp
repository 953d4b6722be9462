#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "krbary/cost.hpp"
#include "krbary/measure.hpp"
#include "krbary/ultrametric.hpp"

namespace krbary::io {

// %.17g; enough digits for an exact round trip.
std::string formatNumber(double x);

DiscreteMeasure readMeasureJson(std::istream& is, std::string id = {});
void writeMeasureJson(std::ostream& os, const DiscreteMeasure& mu);

// Columns x1..xd,weight. A non-numeric first row is taken as a header.
DiscreteMeasure readMeasureCsv(std::istream& is, std::string id = {});
void writeMeasureCsv(std::ostream& os, const DiscreteMeasure& mu);

// Grayscale grids. Pixel (r, c) of an H x W image sits at ((c + 0.5)/W, (r + 0.5)/H).
DenseMatrix readGridCsv(std::istream& is);
void writeGridCsv(std::ostream& os, const DenseMatrix& grid);
DenseMatrix readPgm(std::istream& is);
// Values must be integers in [0, 65535].
void writePgm(std::ostream& os, const DenseMatrix& grid);
DiscreteMeasure gridToMeasure(const DenseMatrix& grid, std::string id = {});
// Inverse of gridToMeasure; every atom must sit on a pixel center.
DenseMatrix measureToGrid(const DiscreteMeasure& mu, std::size_t rows, std::size_t cols);

// Dispatch on the extension: .json, .csv, .grid.csv, .pgm. The id defaults to the file stem.
DiscreteMeasure readMeasure(const std::filesystem::path& path);
// .json or .csv.
void writeMeasure(const std::filesystem::path& path, const DiscreteMeasure& mu);

UltrametricTree readTreeJson(std::istream& is);
void writeTreeJson(std::ostream& os, const UltrametricTree& t);
UltrametricTree readTree(const std::filesystem::path& path);

// {"weights": [...]} with one entry per node, or {"nodes": [...], "weights": [...]}.
std::vector<double> readNodeWeightsJson(std::istream& is, std::size_t nodeCount);
std::vector<double> readNodeWeights(const std::filesystem::path& path, std::size_t nodeCount);

std::string readFile(const std::filesystem::path& path);
void writeFile(const std::filesystem::path& path, const std::string& contents);

}  // namespace krbary::io
