#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "krbary/error.hpp"

namespace cli {

namespace {

constexpr double kSize = 640, kMargin = 40;
const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", x);
    return buf;
}

std::string header() {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kSize) + "\" height=\"" + num(kSize) +
           "\" viewBox=\"0 0 " + num(kSize) + " " + num(kSize) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

struct Frame {
    double x0, y0, scale;
    double px(double x) const { return kMargin + (x - x0) * scale; }
    double py(double y) const { return kSize - kMargin - (y - y0) * scale; }
};

}  // namespace

std::string scatterSvg(const std::vector<krbary::DiscreteMeasure>& measures,
                       const std::optional<krbary::DiscreteMeasure>& overlay) {
    std::vector<const krbary::DiscreteMeasure*> all;
    for (const auto& m : measures) all.push_back(&m);
    if (overlay) all.push_back(&*overlay);
    double lo[2] = {INFINITY, INFINITY}, hi[2] = {-INFINITY, -INFINITY}, wmax = 0;
    for (const auto* m : all) {
        if (m->size() == 0) continue;
        if (m->dim() != 2) throw krbary::ValidationError("render supports 2-D only");
        for (std::size_t k = 0; k < m->size(); ++k) {
            for (int a = 0; a < 2; ++a) {
                lo[a] = std::min(lo[a], m->point(k)[a]);
                hi[a] = std::max(hi[a], m->point(k)[a]);
            }
            wmax = std::max(wmax, m->weight(k));
        }
    }
    std::string s = header();
    if (wmax == 0) return s + "</svg>\n";
    double span = std::max({hi[0] - lo[0], hi[1] - lo[1], 1e-9});
    Frame f{(lo[0] + hi[0] - span) / 2, (lo[1] + hi[1] - span) / 2, (kSize - 2 * kMargin) / span};
    const double rmax = 6;
    auto draw = [&](const krbary::DiscreteMeasure& m, const std::string& colour, double opacity) {
        s += "<g fill=\"" + colour + "\" fill-opacity=\"" + num(opacity) + "\">\n";
        for (std::size_t k = 0; k < m.size(); ++k)
            s += "<circle cx=\"" + num(f.px(m.point(k)[0])) + "\" cy=\"" + num(f.py(m.point(k)[1])) + "\" r=\"" +
                 num(rmax * std::sqrt(m.weight(k) / wmax)) + "\"/>\n";
        s += "</g>\n";
    };
    for (std::size_t i = 0; i < measures.size(); ++i) draw(measures[i], kPalette[i % 10], overlay ? 0.35 : 0.6);
    if (overlay) draw(*overlay, "black", 0.85);
    return s + "</svg>\n";
}

std::string lineSvg(const std::vector<Series>& series, const std::string& xlabel, const std::string& ylabel) {
    double lo[2] = {INFINITY, INFINITY}, hi[2] = {-INFINITY, -INFINITY};
    for (const auto& sr : series)
        for (std::size_t k = 0; k < sr.x.size(); ++k) {
            lo[0] = std::min(lo[0], sr.x[k]);
            hi[0] = std::max(hi[0], sr.x[k]);
            lo[1] = std::min(lo[1], sr.y[k]);
            hi[1] = std::max(hi[1], sr.y[k]);
        }
    std::string s = header();
    if (!(lo[0] <= hi[0])) return s + "</svg>\n";
    lo[1] = std::min(lo[1], 0.0);
    double w = std::max(hi[0] - lo[0], 1e-12), h = std::max(hi[1] - lo[1], 1e-12), inner = kSize - 2 * kMargin;
    auto px = [&](double x) { return kMargin + (x - lo[0]) / w * inner; };
    auto py = [&](double y) { return kSize - kMargin - (y - lo[1]) / h * inner; };
    s += "<g stroke=\"black\" fill=\"none\">\n<line x1=\"" + num(kMargin) + "\" y1=\"" + num(kSize - kMargin) +
         "\" x2=\"" + num(kSize - kMargin) + "\" y2=\"" + num(kSize - kMargin) + "\"/>\n<line x1=\"" + num(kMargin) +
         "\" y1=\"" + num(kMargin) + "\" x2=\"" + num(kMargin) + "\" y2=\"" + num(kSize - kMargin) + "\"/>\n</g>\n";
    s += "<g font-family=\"sans-serif\" font-size=\"12\">\n";
    s += "<text x=\"" + num(kMargin) + "\" y=\"" + num(kSize - kMargin + 16) + "\">" + num(lo[0]) + "</text>\n";
    s += "<text x=\"" + num(kSize - kMargin) + "\" y=\"" + num(kSize - kMargin + 16) + "\" text-anchor=\"end\">" +
         num(hi[0]) + "</text>\n";
    s += "<text x=\"" + num(kSize / 2) + "\" y=\"" + num(kSize - 8) + "\" text-anchor=\"middle\">" + xlabel + "</text>\n";
    s += "<text x=\"4\" y=\"" + num(kSize - kMargin) + "\">" + num(lo[1]) + "</text>\n";
    s += "<text x=\"4\" y=\"" + num(kMargin - 4) + "\">" + num(hi[1]) + "</text>\n";
    s += "<text x=\"" + num(kMargin + 8) + "\" y=\"" + num(kMargin - 4) + "\">" + ylabel + "</text>\n</g>\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& sr = series[i];
        s += "<polyline fill=\"none\" stroke=\"" + std::string(kPalette[i % 10]) + "\" stroke-width=\"2\" points=\"";
        for (std::size_t k = 0; k < sr.x.size(); ++k) s += (k ? " " : "") + num(px(sr.x[k])) + "," + num(py(sr.y[k]));
        s += "\"><title>" + sr.name + "</title></polyline>\n";
    }
    return s + "</svg>\n";
}

}  // namespace cli
