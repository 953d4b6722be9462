#include "krbary/io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "krbary/error.hpp"

namespace krbary::io {

using nlohmann::json;

namespace {

bool parseDouble(std::string_view s, double& out) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

std::vector<std::string_view> splitCommas(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
        std::size_t k = line.find(',', start);
        cells.push_back(line.substr(start, k == std::string_view::npos ? std::string_view::npos : k - start));
        if (k == std::string_view::npos) break;
        start = k + 1;
    }
    return cells;
}

bool blank(std::string_view line) { return line.find_first_not_of(" \t\r") == std::string_view::npos; }

// Numeric CSV rows; an unparsable first row is skipped as a header.
std::vector<std::vector<double>> readNumericRows(std::istream& is) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(is, line)) {
        ++lineNo;
        if (blank(line)) continue;
        std::vector<double> row;
        bool ok = true;
        for (auto cell : splitCommas(line)) {
            double v;
            if (!parseDouble(cell, v)) {
                ok = false;
                break;
            }
            row.push_back(v);
        }
        if (!ok) {
            if (rows.empty() && lineNo == 1) continue;
            throw ValidationError("malformed CSV at line " + std::to_string(lineNo));
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw ValidationError("ragged CSV at line " + std::to_string(lineNo));
        rows.push_back(std::move(row));
    }
    return rows;
}

double asNumber(const json& j, const char* what) {
    if (!j.is_number()) throw ValidationError(std::string("expected a number in ") + what);
    return j.get<double>();
}

json parseJson(std::istream& is) {
    try {
        return json::parse(is);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("malformed JSON: ") + e.what());
    }
}

bool endsWith(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::ifstream openIn(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot open " + path.string());
    return f;
}

}  // namespace

std::string formatNumber(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

DiscreteMeasure readMeasureJson(std::istream& is, std::string id) {
    json j = parseJson(is);
    if (!j.is_object() || !j.contains("points") || !j.contains("weights"))
        throw ValidationError("measure JSON needs \"points\" and \"weights\"");
    const json& P = j["points"];
    const json& W = j["weights"];
    if (!P.is_array() || !W.is_array() || P.size() != W.size())
        throw ValidationError("\"points\" and \"weights\" must be arrays of equal length");
    std::vector<Point> pts;
    std::vector<double> w;
    for (std::size_t i = 0; i < P.size(); ++i) {
        if (!P[i].is_array()) throw ValidationError("each point must be an array of coordinates");
        std::vector<double> c;
        for (const auto& x : P[i]) c.push_back(asNumber(x, "points"));
        pts.emplace_back(std::move(c));
        w.push_back(asNumber(W[i], "weights"));
    }
    if (id.empty() && j.contains("id") && j["id"].is_string()) id = j["id"].get<std::string>();
    DiscreteMeasure mu(std::move(pts), std::move(w), std::move(id));
    if (mu.empty() && j.contains("dim") && j["dim"].is_number_unsigned())
        return DiscreteMeasure::empty(j["dim"].get<std::size_t>()).withId(mu.id());
    return mu;
}

void writeMeasureJson(std::ostream& os, const DiscreteMeasure& mu) {
    os << "{\n";
    if (!mu.id().empty()) os << "  \"id\": " << json(mu.id()).dump() << ",\n";
    if (mu.empty()) os << "  \"dim\": " << mu.dim() << ",\n";
    os << "  \"points\": [";
    for (std::size_t i = 0; i < mu.size(); ++i) {
        os << (i ? ",\n    [" : "\n    [");
        const Point& x = mu.point(i);
        for (std::size_t k = 0; k < x.dim(); ++k) os << (k ? ", " : "") << formatNumber(x[k]);
        os << "]";
    }
    os << (mu.empty() ? "],\n" : "\n  ],\n");
    os << "  \"weights\": [";
    for (std::size_t i = 0; i < mu.size(); ++i) os << (i ? ", " : "") << formatNumber(mu.weight(i));
    os << "]\n}\n";
}

DiscreteMeasure readMeasureCsv(std::istream& is, std::string id) {
    auto rows = readNumericRows(is);
    std::vector<Point> pts;
    std::vector<double> w;
    for (auto& r : rows) {
        if (r.size() < 2) throw ValidationError("measure CSV needs at least one coordinate and a weight");
        w.push_back(r.back());
        r.pop_back();
        pts.emplace_back(std::move(r));
    }
    return DiscreteMeasure(std::move(pts), std::move(w), std::move(id));
}

void writeMeasureCsv(std::ostream& os, const DiscreteMeasure& mu) {
    for (std::size_t k = 0; k < mu.dim(); ++k) os << 'x' << k + 1 << ',';
    os << "weight\n";
    for (std::size_t i = 0; i < mu.size(); ++i) {
        for (double c : mu.point(i).coords()) os << formatNumber(c) << ',';
        os << formatNumber(mu.weight(i)) << '\n';
    }
}

DenseMatrix readGridCsv(std::istream& is) {
    auto rows = readNumericRows(is);
    if (rows.empty()) return {};
    DenseMatrix g(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < g.rows; ++r)
        for (std::size_t c = 0; c < g.cols; ++c) g(r, c) = rows[r][c];
    return g;
}

void writeGridCsv(std::ostream& os, const DenseMatrix& grid) {
    for (std::size_t r = 0; r < grid.rows; ++r) {
        for (std::size_t c = 0; c < grid.cols; ++c) os << (c ? "," : "") << formatNumber(grid(r, c));
        os << '\n';
    }
}

DenseMatrix readPgm(std::istream& is) {
    // Tokens, skipping '#' comments.
    auto token = [&]() {
        std::string t;
        char ch;
        while (is.get(ch)) {
            if (ch == '#') {
                std::string rest;
                std::getline(is, rest);
                if (!t.empty()) break;
                continue;
            }
            if (std::isspace(static_cast<unsigned char>(ch))) {
                if (!t.empty()) break;
                continue;
            }
            t.push_back(ch);
        }
        return t;
    };
    std::string magic = token();
    if (magic != "P2" && magic != "P5") throw ValidationError("unsupported PGM variant (need P2 or P5)");
    auto number = [&](const char* what) {
        std::string t = token();
        double v;
        if (!parseDouble(t, v) || v < 0 || v != std::floor(v)) throw ValidationError(std::string("bad PGM ") + what);
        return static_cast<std::size_t>(v);
    };
    std::size_t W = number("width"), H = number("height"), maxval = number("maxval");
    if (maxval == 0 || maxval > 65535) throw ValidationError("bad PGM maxval");
    DenseMatrix g(H, W);
    for (std::size_t r = 0; r < H; ++r)
        for (std::size_t c = 0; c < W; ++c) {
            if (magic == "P2") {
                g(r, c) = double(number("pixel"));
            } else {
                unsigned char b[2] = {0, 0};
                std::size_t nb = maxval < 256 ? 1 : 2;
                if (!is.read(reinterpret_cast<char*>(b), std::streamsize(nb))) throw ValidationError("truncated PGM");
                g(r, c) = nb == 1 ? b[0] : b[0] * 256.0 + b[1];
            }
        }
    return g;
}

void writePgm(std::ostream& os, const DenseMatrix& grid) {
    double mx = 1;
    for (double v : grid.data) {
        if (!(v >= 0) || v > 65535 || v != std::floor(v)) throw ValidationError("PGM needs integer weights in [0, 65535]");
        mx = std::max(mx, v);
    }
    os << "P2\n" << grid.cols << ' ' << grid.rows << '\n' << static_cast<long>(mx) << '\n';
    for (std::size_t r = 0; r < grid.rows; ++r) {
        for (std::size_t c = 0; c < grid.cols; ++c) os << (c ? " " : "") << static_cast<long>(grid(r, c));
        os << '\n';
    }
}

DiscreteMeasure gridToMeasure(const DenseMatrix& grid, std::string id) {
    std::vector<Point> pts;
    std::vector<double> w;
    for (std::size_t r = 0; r < grid.rows; ++r)
        for (std::size_t c = 0; c < grid.cols; ++c) {
            pts.push_back(Point{(c + 0.5) / double(grid.cols), (r + 0.5) / double(grid.rows)});
            w.push_back(grid(r, c));
        }
    if (pts.empty()) return DiscreteMeasure::empty(2).withId(std::move(id));
    return DiscreteMeasure(std::move(pts), std::move(w), std::move(id));
}

DenseMatrix measureToGrid(const DiscreteMeasure& mu, std::size_t rows, std::size_t cols) {
    if (!mu.empty() && mu.dim() != 2) throw ValidationError("grid output needs 2-D measures");
    DenseMatrix g(rows, cols, 0.0);
    for (std::size_t i = 0; i < mu.size(); ++i) {
        double c = mu.point(i)[0] * double(cols) - 0.5, r = mu.point(i)[1] * double(rows) - 0.5;
        double rc = std::round(c), rr = std::round(r);
        if (std::abs(c - rc) > 1e-6 || std::abs(r - rr) > 1e-6 || rc < 0 || rr < 0 || rc >= double(cols) ||
            rr >= double(rows))
            throw ValidationError("measure atom is not on a pixel center");
        g(std::size_t(rr), std::size_t(rc)) += mu.weight(i);
    }
    return g;
}

DiscreteMeasure readMeasure(const std::filesystem::path& path) {
    std::string name = path.filename().string();
    std::string id = path.stem().string();
    auto f = openIn(path);
    if (endsWith(name, ".grid.csv")) return gridToMeasure(readGridCsv(f), path.stem().stem().string());
    if (endsWith(name, ".pgm")) return gridToMeasure(readPgm(f), id);
    if (endsWith(name, ".csv")) return readMeasureCsv(f, id);
    if (endsWith(name, ".json")) return readMeasureJson(f, id);
    throw ValidationError("unknown measure format: " + name + " (use .json, .csv, .grid.csv or .pgm)");
}

void writeMeasure(const std::filesystem::path& path, const DiscreteMeasure& mu) {
    std::ostringstream os;
    std::string name = path.filename().string();
    if (endsWith(name, ".grid.csv") || endsWith(name, ".pgm"))
        throw ValidationError("grid output needs explicit dimensions; write .json or .csv");
    if (endsWith(name, ".csv"))
        writeMeasureCsv(os, mu);
    else if (endsWith(name, ".json"))
        writeMeasureJson(os, mu);
    else
        throw ValidationError("unknown measure format: " + name + " (use .json or .csv)");
    writeFile(path, os.str());
}

UltrametricTree readTreeJson(std::istream& is) {
    json j = parseJson(is);
    if (!j.is_object() || !j.contains("parent") || !j.contains("height") || !j.contains("leaves"))
        throw ValidationError("tree JSON needs \"parent\", \"height\" and \"leaves\"");
    auto indices = [](const json& a, const char* what) {
        if (!a.is_array()) throw ValidationError(std::string("\"") + what + "\" must be an array");
        std::vector<std::size_t> out;
        for (const auto& x : a) {
            if (!x.is_number_unsigned()) throw ValidationError(std::string("\"") + what + "\" must hold node indices");
            out.push_back(x.get<std::size_t>());
        }
        return out;
    };
    std::vector<double> h;
    if (!j["height"].is_array()) throw ValidationError("\"height\" must be an array");
    for (const auto& x : j["height"]) h.push_back(asNumber(x, "height"));
    return UltrametricTree(indices(j["parent"], "parent"), std::move(h), indices(j["leaves"], "leaves"));
}

void writeTreeJson(std::ostream& os, const UltrametricTree& t) {
    auto list = [&](const auto& v, auto fmt) {
        os << '[';
        for (std::size_t k = 0; k < v.size(); ++k) os << (k ? ", " : "") << fmt(v[k]);
        os << ']';
    };
    auto asInt = [](std::size_t x) { return std::to_string(x); };
    os << "{\n  \"parent\": ";
    list(t.parents(), asInt);
    os << ",\n  \"height\": ";
    list(t.heights(), formatNumber);
    os << ",\n  \"leaves\": ";
    list(t.leaves(), asInt);
    os << "\n}\n";
}

UltrametricTree readTree(const std::filesystem::path& path) {
    auto f = openIn(path);
    return readTreeJson(f);
}

std::vector<double> readNodeWeightsJson(std::istream& is, std::size_t nodeCount) {
    json j = parseJson(is);
    if (!j.is_object() || !j.contains("weights") || !j["weights"].is_array())
        throw ValidationError("tree measure JSON needs \"weights\"");
    const json& W = j["weights"];
    std::vector<double> out(nodeCount, 0.0);
    if (j.contains("nodes")) {
        const json& N = j["nodes"];
        if (!N.is_array() || N.size() != W.size())
            throw ValidationError("\"nodes\" and \"weights\" must be arrays of equal length");
        for (std::size_t k = 0; k < N.size(); ++k) {
            if (!N[k].is_number_unsigned() || N[k].get<std::size_t>() >= nodeCount)
                throw ValidationError("unknown node id");
            out[N[k].get<std::size_t>()] += asNumber(W[k], "weights");
        }
    } else {
        if (W.size() != nodeCount) throw ValidationError("dense tree measure must have one weight per node");
        for (std::size_t k = 0; k < nodeCount; ++k) out[k] = asNumber(W[k], "weights");
    }
    return out;
}

std::vector<double> readNodeWeights(const std::filesystem::path& path, std::size_t nodeCount) {
    auto f = openIn(path);
    return readNodeWeightsJson(f, nodeCount);
}

std::string readFile(const std::filesystem::path& path) {
    auto f = openIn(path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void writeFile(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot write " + path.string());
    f << contents;
    if (!f) throw ValidationError("cannot write " + path.string());
}

}  // namespace krbary::io
