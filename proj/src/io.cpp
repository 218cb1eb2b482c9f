#include "fblab/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "fblab/error.hpp"

namespace fblab {

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return {buf, res.ptr};
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : path_(path), out_(path, std::ios::binary), columns_(header.size()) {
    if (!out_) throw IoError("cannot open " + path.string() + " for writing");
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
}

CsvWriter::~CsvWriter() {
    if (out_.is_open()) out_.close();
}

void CsvWriter::row(const std::vector<double>& values) {
    if (values.size() != columns_) throw DomainError("CSV row width does not match the header of " + path_.string());
    for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << format_number(values[i]);
    out_ << '\n';
}

void CsvWriter::row(const std::string& label, const std::vector<double>& values) {
    if (values.size() + 1 != columns_) throw DomainError("CSV row width does not match the header of " + path_.string());
    out_ << label;
    for (double v : values) out_ << ',' << format_number(v);
    out_ << '\n';
}

void CsvWriter::close() {
    out_.flush();
    const bool ok = static_cast<bool>(out_);
    out_.close();
    if (!ok) throw IoError("write to " + path_.string() + " failed");
}

namespace {

std::vector<std::string> node_header(int dim) {
    std::vector<std::string> h{"node", "x"};
    if (dim > 1) h.emplace_back("y");
    if (dim > 2) h.emplace_back("z");
    h.emplace_back("class");
    return h;
}

std::vector<double> node_prefix(const Grid& g, std::size_t n) {
    const Point x = g.position(n);
    std::vector<double> row{static_cast<double>(n)};
    for (int a = 0; a < g.dim(); ++a) row.push_back(x[static_cast<std::size_t>(a)]);
    row.push_back(g.node_class(n) == NodeClass::Interior ? 0.0 : 1.0);
    return row;
}

}  // namespace

void write_field_csv(const std::filesystem::path& path, const ScalarField& u, const std::string& name) {
    const Grid& g = *u.grid();
    auto header = node_header(g.dim());
    header.push_back(name);
    CsvWriter w(path, header);
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (!g.active(n)) continue;
        auto row = node_prefix(g, n);
        row.push_back(u[n]);
        w.row(row);
    }
    w.close();
}

void write_field_csv(const std::filesystem::path& path, const VectorField& u, const std::string& name) {
    const Grid& g = *u.grid();
    auto header = node_header(g.dim());
    for (int c = 0; c < u.components(); ++c) header.push_back(name + std::to_string(c));
    CsvWriter w(path, header);
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (!g.active(n)) continue;
        auto row = node_prefix(g, n);
        for (double v : u.at(n)) row.push_back(v);
        w.row(row);
    }
    w.close();
}

void write_field_csv(const std::filesystem::path& path, const AxisymField& u) {
    const AxisymGrid& g = *u.grid;
    CsvWriter w(path, {"node", "r", "z", "class", "ur", "uz", "norm"});
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (!g.active(n)) continue;
        w.row({static_cast<double>(n), g.r(g.i_of(n)), g.z(g.j_of(n)),
               g.node_class(n) == NodeClass::Interior ? 0.0 : 1.0, u.ur[n], u.uz[n], u.norm(n)});
    }
    w.close();
}

PgmImage write_pgm(const std::filesystem::path& path, const std::vector<double>& values, int width, int height) {
    if (width <= 0 || height <= 0 || values.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw DomainError("PGM dimensions do not match the data");
    }
    PgmImage img{path, width, height, 0.0, 0.0};
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double v : values) {
        if (std::isnan(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (lo > hi) lo = hi = 0.0;
    img.lo = lo;
    img.hi = hi;
    std::vector<unsigned char> bytes(values.size(), 0);
    if (hi > lo) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (std::isnan(values[i])) continue;
            bytes[i] = static_cast<unsigned char>(std::lround(255.0 * (values[i] - lo) / (hi - lo)));
        }
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "P5\n" << width << ' ' << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("write to " + path.string() + " failed");
    return img;
}

namespace {

/// Slice of node values in the plane spanned by axes (ax, ay) through the
/// lattice middle of the remaining axis. Image rows run top-down in ay.
std::vector<PgmImage> export_slices(const std::filesystem::path& base, const Grid& g, const std::vector<double>& node_values) {
    if (g.dim() < 2) throw DomainError("PGM export needs a 2D or 3D grid");
    const auto& ext = g.extents();
    auto slice = [&](int ax, int ay, int az, const std::string& suffix) {
        const int w = ext[static_cast<std::size_t>(ax)], h = ext[static_cast<std::size_t>(ay)];
        std::vector<double> img(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), std::numeric_limits<double>::quiet_NaN());
        std::array<int, kMaxDim> idx{0, 0, 0};
        if (az >= 0) idx[static_cast<std::size_t>(az)] = ext[static_cast<std::size_t>(az)] / 2;
        for (int j = 0; j < h; ++j) {
            for (int i = 0; i < w; ++i) {
                idx[static_cast<std::size_t>(ax)] = i;
                idx[static_cast<std::size_t>(ay)] = j;
                const std::size_t n = g.linear_index(idx);
                if (!g.active(n)) continue;
                img[static_cast<std::size_t>(h - 1 - j) * static_cast<std::size_t>(w) + static_cast<std::size_t>(i)] = node_values[n];
            }
        }
        std::filesystem::path p = base;
        p += suffix + ".pgm";
        return write_pgm(p, img, w, h);
    };
    if (g.dim() == 2) return {slice(0, 1, -1, "")};
    return {slice(0, 1, 2, "-xy"), slice(0, 2, 1, "-xz"), slice(1, 2, 0, "-yz")};
}

}  // namespace

std::vector<PgmImage> export_field_pgm(const std::filesystem::path& base, const ScalarField& u) {
    return export_slices(base, *u.grid(), std::vector<double>(u.values().begin(), u.values().end()));
}

std::vector<PgmImage> export_field_pgm(const std::filesystem::path& base, const VectorField& u) {
    std::vector<double> mag(u.grid()->size(), 0.0);
    for (std::size_t n = 0; n < mag.size(); ++n) {
        double s = 0.0;
        for (double v : u.at(n)) s += v * v;
        mag[n] = std::sqrt(s);
    }
    return export_slices(base, *u.grid(), mag);
}

PgmImage export_axisym_pgm(const std::filesystem::path& path, const AxisymGrid& g, const std::vector<double>& values) {
    if (values.size() != g.size()) throw DomainError("axisymmetric image needs one value per node");
    const int w = g.nr(), h = g.nz();
    std::vector<double> img(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (!g.active(n)) continue;
        img[static_cast<std::size_t>(h - 1 - g.j_of(n)) * static_cast<std::size_t>(w) + static_cast<std::size_t>(g.i_of(n))] = values[n];
    }
    return write_pgm(path, img, w, h);
}

}  // namespace fblab
