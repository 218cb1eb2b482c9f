#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fblab/axisym.hpp"
#include "fblab/error.hpp"
#include "fblab/grid.hpp"

namespace fblab {

/// File could not be opened or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// Shortest decimal string that reads back to the same double.
std::string format_number(double x);

/// Comma-separated file with a header row. Numbers are written in shortest
/// round-trip form, so identical values give identical bytes.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
    ~CsvWriter();
    CsvWriter(const CsvWriter&) = delete;
    CsvWriter& operator=(const CsvWriter&) = delete;

    void row(const std::vector<double>& values);
    /// Row with a leading text column.
    void row(const std::string& label, const std::vector<double>& values);
    /// Flushes and throws IoError if any write failed.
    void close();

private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::size_t columns_;
};

/// One row per active node: node, x[, y[, z]], class (0 Interior, 1 Boundary), u.
void write_field_csv(const std::filesystem::path& path, const ScalarField& u, const std::string& name = "u");
/// One row per active node with columns u0 .. u{m-1}.
void write_field_csv(const std::filesystem::path& path, const VectorField& u, const std::string& name = "u");
/// One row per active node: node, r, z, class, ur, uz, norm.
void write_field_csv(const std::filesystem::path& path, const AxisymField& u);

struct PgmImage {
    std::filesystem::path path;
    int width = 0;
    int height = 0;
    /// Normalisation range: value v maps to round(255 (v - lo) / (hi - lo)).
    /// A degenerate range (hi == lo) maps every pixel to 0.
    double lo = 0.0;
    double hi = 0.0;
};

/// Binary P5, maxval 255, row 0 at the top. values is row-major,
/// width * height entries; NaN entries (no data) map to 0 and are left out of
/// the range.
PgmImage write_pgm(const std::filesystem::path& path, const std::vector<double>& values, int width, int height);

/// 2D fields give one image at base + ".pgm"; 3D fields give the three
/// axis-aligned mid-slices base + "-xy.pgm", "-xz.pgm", "-yz.pgm". Vector
/// fields are rendered as |u|. Exterior nodes carry no data. 1D grids throw
/// DomainError.
std::vector<PgmImage> export_field_pgm(const std::filesystem::path& base, const ScalarField& u);
std::vector<PgmImage> export_field_pgm(const std::filesystem::path& base, const VectorField& u);

/// (r, z) image of a per-node value on the axisymmetric lattice; r grows to
/// the right, z upward.
PgmImage export_axisym_pgm(const std::filesystem::path& path, const AxisymGrid& grid, const std::vector<double>& values);

}  // namespace fblab
