#include "commands.hpp"

#include <glob.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "krbary/barycenter.hpp"
#include "krbary/baselines.hpp"
#include "krbary/error.hpp"
#include "krbary/io.hpp"
#include "krbary/kr_distance.hpp"
#include "krbary/synth.hpp"
#include "krbary/ultrametric.hpp"
#include "manifest.hpp"
#include "svg.hpp"

namespace fs = std::filesystem;
using namespace krbary;

namespace cli {

namespace {

constexpr int kExitValidation = 2, kExitGuard = 3, kExitSolver = 4, kExitMismatch = 5;

std::string sig12(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

std::vector<std::size_t> parseGrid(const std::string& s) {
    std::vector<std::size_t> K;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, 'x')) {
        std::size_t pos = 0;
        unsigned long v = 0;
        try {
            v = std::stoul(part, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != part.size() || v == 0) throw ValidationError("bad grid size '" + s + "' (expected e.g. 16x16)");
        K.push_back(v);
    }
    if (K.empty()) throw ValidationError("bad grid size '" + s + "' (expected e.g. 16x16)");
    return K;
}

std::vector<double> parseList(const std::string& s, std::size_t expect, const std::string& what) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, ',')) {
        std::size_t pos = 0;
        double x = 0;
        try {
            x = std::stod(part, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != part.size() || part.empty()) throw ValidationError("bad number list for " + what + ": '" + s + "'");
        v.push_back(x);
    }
    if (expect && v.size() != expect)
        throw ValidationError(what + " needs " + std::to_string(expect) + " comma-separated numbers");
    return v;
}

std::optional<std::pair<Point, Point>> parseBox(const std::string& s) {
    if (s.empty()) return std::nullopt;
    auto v = parseList(s, 0, "--box");
    if (v.size() % 2 != 0 || v.empty()) throw ValidationError("--box needs lo coordinates then hi coordinates");
    std::size_t d = v.size() / 2;
    return std::pair{Point(std::vector<double>(v.begin(), v.begin() + long(d))),
                     Point(std::vector<double>(v.begin() + long(d), v.end()))};
}

// Expands shell-style patterns; literal paths pass through. Matches are sorted.
std::vector<fs::path> expand(const std::vector<std::string>& patterns) {
    std::vector<fs::path> files;
    for (const auto& pat : patterns) {
        glob_t g{};
        int rc = ::glob(pat.c_str(), 0, nullptr, &g);
        if (rc == 0) {
            for (std::size_t k = 0; k < g.gl_pathc; ++k) files.emplace_back(g.gl_pathv[k]);
        } else if (fs::exists(pat)) {
            files.emplace_back(pat);
        }
        globfree(&g);
        if (rc != 0 && !fs::exists(pat)) throw ValidationError("no files match '" + pat + "'");
    }
    return files;
}

std::vector<DiscreteMeasure> loadMeasures(RunRecord& rec, const std::vector<std::string>& patterns) {
    std::vector<DiscreteMeasure> ms;
    for (const auto& f : expand(patterns)) {
        ms.push_back(io::readMeasure(f));
        rec.input(f);
    }
    if (ms.empty()) throw ValidationError("no input measures");
    return ms;
}

DiscreteMeasure loadMeasure(RunRecord& rec, const std::string& path) {
    auto m = io::readMeasure(path);
    rec.input(path);
    return m;
}

void writeText(RunRecord& rec, const std::string& path, const std::string& text) {
    auto p = rec.output(path);
    io::writeFile(p, text);
    rec.wrote(p);
}

void writeMeasureOut(RunRecord& rec, const std::string& path, const DiscreteMeasure& mu) {
    auto p = rec.output(path);
    io::writeMeasure(p, mu);
    rec.wrote(p);
}

std::string traceCsv(const std::vector<TraceEntry>& trace) {
    // Timings stay in the manifest so that this file is reproducible.
    std::string s = "stage,level,candidates,support,mass,frechetValue,iterations\n";
    for (const auto& t : trace)
        s += t.stage + "," + std::to_string(t.level) + "," + std::to_string(t.candidates) + "," +
             std::to_string(t.support) + "," + io::formatNumber(t.mass) + "," + io::formatNumber(t.frechetValue) +
             "," + std::to_string(t.iterations) + "\n";
    return s;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v.empty() ? 0.0 : v[(v.size() - 1) / 2];
}

struct Globals {
    std::string outdir = ".";
    std::string manifest;
    std::size_t jobs = 1;
};

struct Command {
    std::string name;
    std::function<void(RunRecord&)> body;
};

// ---------------------------------------------------------------- krdist
struct KrdistOpts {
    std::string mu, nu, plan, dual;
    double p = 1, C = 1;
};

void krdist(const KrdistOpts& o, RunRecord& rec) {
    auto mu = loadMeasure(rec, o.mu), nu = loadMeasure(rec, o.nu);
    rec.set("p", o.p);
    rec.set("c", o.C);
    auto r = uot(mu, nu, o.p, o.C);
    rec.out << sig12(r.krDistance) << "\n";
    rec.diagnostic("uot_value", r.value);
    rec.diagnostic("created_mass", r.createdMass);
    rec.diagnostic("destroyed_mass", r.destroyedMass);
    if (!o.plan.empty()) {
        std::ostringstream os;
        writePlanCsv(os, r.plan);
        writeText(rec, o.plan, os.str());
    }
    if (!o.dual.empty()) {
        std::string s = "side,index,potential\n";
        for (std::size_t i = 0; i < r.duals.f.size(); ++i)
            s += "mu," + std::to_string(i) + "," + io::formatNumber(r.duals.f[i]) + "\n";
        for (std::size_t j = 0; j < r.duals.g.size(); ++j)
            s += "nu," + std::to_string(j) + "," + io::formatNumber(r.duals.g[j]) + "\n";
        writeText(rec, o.dual, s);
    }
}

// ---------------------------------------------------------------- krbary
struct BaryOpts {
    std::vector<std::string> measures;
    double p = 2, C = 0;
    std::string solver = "multiscale", grid = "16x16", final = "128x128", box, out, plot, trace;
    double prune = 1e-5;
    double cap = 0;
};

MultiScaleConfig multiScaleConfig(const BaryOpts& o) {
    MultiScaleConfig cfg;
    cfg.finalGrid = parseGrid(o.final);
    cfg.pruneThreshold = o.prune;
    cfg.boundingBox = parseBox(o.box);
    if (o.grid != "auto") cfg.initialGrid = parseGrid(o.grid);
    return cfg;
}

void krbaryCmd(const BaryOpts& o, RunRecord& rec) {
    if (o.out.empty()) throw ValidationError("--out is required");
    if (!(o.C > 0)) throw ValidationError("--c must be positive");
    BarycenterProblem pr{loadMeasures(rec, o.measures), o.p, o.C};
    rec.set("p", o.p);
    rec.set("c", o.C);
    rec.set("solver", o.solver);
    BarycenterSolution s;
    if (o.solver == "multiscale") {
        auto cfg = multiScaleConfig(o);
        if (o.grid == "auto") cfg.initialGrid = coarsestValidGrid(pr, cfg);
        rec.set("grid", cfg.initialGrid);
        rec.set("final", cfg.finalGrid);
        rec.set("prune", o.prune);
        s = solveMultiScale(pr, cfg);
    } else if (o.solver == "lp") {
        s = o.cap > 0 ? solveCentroidLp(pr, std::size_t(o.cap)) : solveCentroidLp(pr);
    } else if (o.solver == "multimarginal") {
        s = o.cap > 0 ? solveMultiMarginal(pr, o.cap) : solveMultiMarginal(pr);
    } else {
        throw ValidationError("unknown solver '" + o.solver + "' (use multiscale, lp or multimarginal)");
    }
    writeMeasureOut(rec, o.out, s.barycenter.withId("barycenter"));
    if (!o.trace.empty()) writeText(rec, o.trace, traceCsv(s.trace));
    if (!o.plot.empty()) writeText(rec, o.plot, scatterSvg(pr.measures, s.barycenter));
    rec.out << "frechet " << sig12(s.frechetValue) << "\nmass " << sig12(s.barycenter.totalMass()) << "\natoms "
            << s.barycenter.size() << "\n";
    Json trace = Json::array();
    for (const auto& t : s.trace)
        trace.push_back({{"stage", t.stage}, {"level", t.level}, {"support", t.support}, {"seconds", t.seconds},
                         {"iterations", t.iterations}});
    rec.diagnostic("trace", trace);
    rec.diagnostic("solver_value", s.solverValue);
}

// ---------------------------------------------------------------- masscurve
struct CurveOpts {
    std::vector<std::string> measures;
    double p = 2, cmin = 0.05, cmax = 0.8;
    std::size_t steps = 16;
    std::string final = "128x128", box, out, plot;
    double prune = 1e-5;
};

void masscurveCmd(const CurveOpts& o, std::size_t jobs, RunRecord& rec) {
    if (o.steps == 0) throw ValidationError("--steps must be positive");
    if (!(o.cmin > 0 && o.cmin <= o.cmax)) throw ValidationError("need 0 < --cmin <= --cmax");
    BarycenterProblem pr{loadMeasures(rec, o.measures), o.p, o.cmin};
    std::vector<double> Cs;
    for (std::size_t k = 0; k < o.steps; ++k)
        Cs.push_back(o.steps == 1 ? o.cmin : o.cmin + (o.cmax - o.cmin) * double(k) / double(o.steps - 1));
    MultiScaleConfig cfg;
    cfg.finalGrid = parseGrid(o.final);
    cfg.pruneThreshold = o.prune;
    cfg.boundingBox = parseBox(o.box);
    rec.set("p", o.p);
    rec.set("c_values", Cs);
    rec.set("final", cfg.finalGrid);
    rec.set("prune", o.prune);
    auto curve = massCurve(pr, Cs, cfg, jobs);
    std::string csv = "C,mass,frechetValue\n";
    Series mass{"mass", {}, {}}, med{"median of input masses", {}, {}};
    std::vector<double> masses;
    for (const auto& m : pr.measures) masses.push_back(m.totalMass());
    for (const auto& pt : curve) {
        csv += io::formatNumber(pt.C) + "," + io::formatNumber(pt.mass) + "," + io::formatNumber(pt.frechetValue) + "\n";
        mass.x.push_back(pt.C);
        mass.y.push_back(pt.mass);
        med.x.push_back(pt.C);
        med.y.push_back(median(masses));
    }
    if (o.out.empty())
        rec.out << csv;
    else
        writeText(rec, o.out, csv);
    if (!o.plot.empty()) writeText(rec, o.plot, lineSvg({mass, med}, "C", "mass"));
    rec.diagnostic("median_mass", median(masses));
}

// ---------------------------------------------------------------- tree-kr
struct TreeOpts {
    std::string tree, mu, nu;
    double p = 1, C = 1;
    bool lp = false;
};

void treeKr(const TreeOpts& o, RunRecord& rec) {
    auto t = io::readTree(o.tree);
    rec.input(o.tree);
    auto mu = io::readNodeWeights(o.mu, t.size()), nu = io::readNodeWeights(o.nu, t.size());
    rec.input(o.mu);
    rec.input(o.nu);
    rec.set("p", o.p);
    rec.set("c", o.C);
    double v = krOnTree(t, mu, nu, o.p, o.C);
    rec.out << sig12(std::pow(v, 1 / o.p)) << "\n";
    rec.diagnostic("uot_value", v);
    if (o.lp) {
        auto r = uot(nodeMeasure(mu), nodeMeasure(nu), o.p, o.C, GroundCost::treeTable(nodeDistanceMatrix(t), 1));
        rec.out << "lp " << sig12(r.krDistance) << "\n";
    }
}

// ---------------------------------------------------------------- baseline
struct BaselineOpts {
    std::string mu, nu, grid = "64x64", box = "0,0,1,1", out, plot, sweep;
    std::vector<std::string> measures;
    std::vector<double> params;
    double eps = 0, tol = 1e-8;
    std::size_t maxIter = 5000;
};

ScalingConfig scalingConfig(const BaselineOpts& o) {
    ScalingConfig cfg;
    cfg.epsilon = o.eps;
    cfg.tol = o.tol;
    cfg.maxIter = o.maxIter;
    return cfg;
}

// Parameter grids for side-by-side comparisons.
std::vector<double> sweepValues(DivergenceModel model, const std::string& name) {
    std::vector<double> v;
    auto range = [&](double a, double step, int n) {
        for (int k = 0; k < n; ++k) v.push_back(std::round((a + step * k) * 1e6) / 1e6);
    };
    if (name == "four-squares") {
        if (model == DivergenceModel::GHK)
            range(0.01, 0.14, 15);
        else
            range(0.01, 0.07, 11);
    } else if (name == "digits") {
        if (model == DivergenceModel::GHK)
            range(0.01, 0.11, 10);
        else
            range(0.01, 0.07, 10);
    } else {
        throw ValidationError("unknown sweep '" + name + "' (use four-squares or digits)");
    }
    return v;
}

void baselineDist(DivergenceModel model, const BaselineOpts& o, RunRecord& rec) {
    if (o.params.size() != 1) throw ValidationError("--param takes exactly one value for dist");
    auto mu = loadMeasure(rec, o.mu), nu = loadMeasure(rec, o.nu);
    rec.set("param", o.params[0]);
    auto r = unbalancedScaling(mu, nu, DivergenceSpec{model, o.params[0]}, scalingConfig(o));
    rec.out << sig12(r.value) << (r.converged ? "" : " unconverged") << "\n";
    rec.diagnostic("converged", r.converged);
    rec.diagnostic("iterations", r.iterations);
    rec.diagnostic("epsilon", r.epsilon);
}

void baselineBary(DivergenceModel model, const BaselineOpts& o, RunRecord& rec) {
    if (o.out.empty()) throw ValidationError("--out is required");
    auto ms = loadMeasures(rec, o.measures);
    std::vector<double> params = o.params;
    if (!o.sweep.empty()) {
        if (!params.empty()) throw ValidationError("use either --param or --sweep");
        params = sweepValues(model, o.sweep);
    }
    if (params.empty()) throw ValidationError("--param or --sweep is required");
    auto K = parseGrid(o.grid);
    auto box = parseBox(o.box);
    if (K.size() != 2 || !box || box->first.dim() != 2) throw ValidationError("barycenter grids are 2-D");
    ScalingConfig cfg = scalingConfig(o);
    for (std::size_t r = 0; r < K[1]; ++r)
        for (std::size_t c = 0; c < K[0]; ++c) {
            double x = box->first[0] + (double(c) + 0.5) * (box->second[0] - box->first[0]) / double(K[0]);
            double y = box->first[1] + (double(r) + 0.5) * (box->second[1] - box->first[1]) / double(K[1]);
            cfg.gridSupport.push_back(Point{x, y});
        }
    rec.set("params", params);
    rec.set("grid", K);
    Json diag = Json::array();
    for (double prm : params) {
        auto b = scalingBarycenter(ms, DivergenceSpec{model, prm}, cfg);
        std::string path = params.size() == 1 ? o.out : (fs::path(o.out) / ("param_" + io::formatNumber(prm) + ".json")).string();
        writeMeasureOut(rec, path, b.barycenter.withId("barycenter"));
        if (params.size() == 1 && !o.plot.empty()) writeText(rec, o.plot, scatterSvg(ms, b.barycenter));
        rec.out << io::formatNumber(prm) << " mass " << sig12(b.barycenter.totalMass())
                << (b.converged ? "" : " unconverged") << "\n";
        diag.push_back({{"param", prm}, {"converged", b.converged}, {"iterations", b.iterations}, {"epsilon", b.epsilon}});
    }
    rec.diagnostic("runs", diag);
}

// ---------------------------------------------------------------- gen
struct GenOpts {
    std::uint64_t seed = 0;
    std::string out, format = "json";
    std::size_t count = 100, points = 50, ellipses = 0, n = 64;
    std::string intensities = "2,1,1,1,1";
    double halfWidth = 0.05, axisMin = 0, axisMax = 0, side = 0.25;
    // distortion
    std::string mu0, preset, mAdd = "0.5,0.5", shiftBox = "0,0,0,0", weightChange = "0,0";
    double pDel = 0, lambdaDel = 0, pAdd = 0, lambdaAdd = 0, sigmaAdd = 0, u0 = 1, u1 = 1;
};

void writeDataset(RunRecord& rec, const GenOpts& o, const std::vector<DiscreteMeasure>& ms) {
    if (o.out.empty()) throw ValidationError("--out is required");
    if (o.format != "json" && o.format != "csv") throw ValidationError("--format must be json or csv");
    char name[32];
    for (std::size_t i = 0; i < ms.size(); ++i) {
        std::snprintf(name, sizeof name, "m%04zu.", i);
        writeMeasureOut(rec, (fs::path(o.out) / (name + o.format)).string(), ms[i]);
    }
    rec.seed(o.seed);
    rec.out << ms.size() << " measures written to " << o.out << "\n";
}

void genNested(const GenOpts& o, RunRecord& rec) {
    synth::NestedConfig c;
    c.count = o.count;
    c.ellipses = o.ellipses;
    c.pointsPerEllipse = o.points;
    c.seed = o.seed;
    if (o.axisMin > 0) c.axisMin = o.axisMin;
    if (o.axisMax > 0) c.axisMax = o.axisMax;
    rec.set("count", c.count);
    rec.set("ellipses", c.ellipses);
    rec.set("points", c.pointsPerEllipse);
    rec.set("axis", {c.axisMin, c.axisMax});
    writeDataset(rec, o, synth::nestedEllipses(c));
}

void genClustered(const GenOpts& o, RunRecord& rec) {
    synth::ClusteredConfig c;
    c.count = o.count;
    c.pointsPerEllipse = o.points;
    c.seed = o.seed;
    c.intensities = parseList(o.intensities, c.centers.size(), "--intensities");
    c.halfWidth = o.halfWidth;
    if (o.axisMin > 0) c.axisMin = o.axisMin;
    if (o.axisMax > 0) c.axisMax = o.axisMax;
    rec.set("count", c.count);
    rec.set("points", c.pointsPerEllipse);
    rec.set("intensities", c.intensities);
    rec.set("half_width", c.halfWidth);
    rec.set("axis", {c.axisMin, c.axisMax});
    writeDataset(rec, o, synth::clusteredEllipses(c));
}

void genDistort(GenOpts o, RunRecord& rec, const CLI::App& sub) {
    if (o.mu0.empty()) throw ValidationError("--mu0 is required");
    auto mu0 = loadMeasure(rec, o.mu0);
    if (o.preset == "noisy") {
        // Explicit flags still win over the preset.
        auto unset = [&](const char* flag) { return sub.count(flag) == 0; };
        if (unset("--p-del")) o.pDel = 1.0 / 3;
        if (unset("--lambda-del")) o.lambdaDel = 75;
        if (unset("--p-add")) o.pAdd = 1.0 / 3;
        if (unset("--lambda-add")) o.lambdaAdd = 25;
        if (unset("--sigma-add")) o.sigmaAdd = 0.15;
        if (unset("--u0")) o.u0 = 0.9;
        if (unset("--u1")) o.u1 = 1.1;
        if (unset("--shift-box")) o.shiftBox = "-0.025,-0.025,0.025,0.025";
        if (unset("--weight-change")) o.weightChange = "0.1,0.1";
    } else if (!o.preset.empty()) {
        throw ValidationError("unknown preset '" + o.preset + "' (use noisy)");
    }
    synth::DistortionParams d;
    d.pDel = o.pDel;
    d.lambdaDel = o.lambdaDel;
    d.pAdd = o.pAdd;
    d.lambdaAdd = o.lambdaAdd;
    auto m = parseList(o.mAdd, 2, "--m-add");
    d.mAdd = Point{m[0], m[1]};
    d.sigmaAdd[0][0] = d.sigmaAdd[1][1] = o.sigmaAdd;
    d.u0 = o.u0;
    d.u1 = o.u1;
    auto sb = parseList(o.shiftBox, 4, "--shift-box");
    d.a1 = sb[0];
    d.a2 = sb[1];
    d.b1 = sb[2];
    d.b2 = sb[3];
    auto wc = parseList(o.weightChange, 2, "--weight-change");
    d.l = wc[0];
    d.u = wc[1];
    d.seed = o.seed;
    rec.set("count", o.count);
    rec.set("distortion", {{"p_del", d.pDel}, {"lambda_del", d.lambdaDel}, {"p_add", d.pAdd},
                           {"lambda_add", d.lambdaAdd}, {"m_add", m}, {"sigma_add", o.sigmaAdd},
                           {"u0", d.u0}, {"u1", d.u1}, {"shift_box", sb}, {"weight_change", wc}});
    writeDataset(rec, o, synth::distort(mu0, d, o.count));
}

void genSquares(const GenOpts& o, RunRecord& rec) {
    rec.set("n", o.n);
    rec.set("side", o.side);
    writeDataset(rec, o, synth::fourSquares(o.n, o.side));
}

// ---------------------------------------------------------------- render
struct RenderOpts {
    std::vector<std::string> measures;
    std::string overlay, curve, out;
};

void renderCmd(const RenderOpts& o, RunRecord& rec) {
    if (o.out.empty()) throw ValidationError("--out is required");
    if (!o.curve.empty()) {
        std::ifstream f(o.curve);
        if (!f) throw ValidationError("cannot open " + o.curve);
        rec.input(o.curve);
        std::string line;
        std::getline(f, line);
        std::vector<std::string> names;
        {
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ',')) names.push_back(cell);
        }
        if (names.size() < 2) throw ValidationError("curve CSV needs a header with at least two columns");
        std::vector<Series> series;
        for (std::size_t k = 1; k < names.size(); ++k) series.push_back({names[k], {}, {}});
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            auto v = parseList(line, names.size(), "curve CSV row");
            for (std::size_t k = 1; k < names.size(); ++k) {
                series[k - 1].x.push_back(v[0]);
                series[k - 1].y.push_back(v[k]);
            }
        }
        writeText(rec, o.out, lineSvg(series, names[0], names.size() == 2 ? names[1] : "value"));
        return;
    }
    std::vector<DiscreteMeasure> ms;
    if (!o.measures.empty()) ms = loadMeasures(rec, o.measures);
    std::optional<DiscreteMeasure> overlay;
    if (!o.overlay.empty()) overlay = loadMeasure(rec, o.overlay);
    writeText(rec, o.out, scatterSvg(ms, overlay));
}

// ---------------------------------------------------------------- replay
struct ReplayOpts {
    std::string manifest;
    bool check = false;
};

int replayCmd(const ReplayOpts& o, const Globals& g, bool outdirGiven) {
    auto j = Json::parse(io::readFile(o.manifest), nullptr, false);
    if (j.is_discarded() || !j.contains("argv") || !j.contains("cwd"))
        throw ValidationError("not a run manifest: " + o.manifest);
    std::vector<std::string> args;
    for (std::size_t k = 0; k < j["argv"].size(); ++k) {
        std::string a = j["argv"][k];
        if (a == "--outdir" || a == "--manifest") {
            ++k;
            continue;
        }
        if (a.rfind("--outdir=", 0) == 0 || a.rfind("--manifest=", 0) == 0) continue;
        args.push_back(a);
    }
    std::string outdir = outdirGiven ? fs::absolute(g.outdir).string() : std::string(j["outdir"]);
    args.insert(args.begin(), {"--outdir", outdir});
    if (!g.manifest.empty()) args.insert(args.begin(), {"--manifest", fs::absolute(g.manifest).string()});
    auto here = fs::current_path();
    fs::current_path(std::string(j["cwd"]));
    std::ostringstream captured;
    auto* old = std::cout.rdbuf(captured.rdbuf());
    int rc = run(args);
    std::cout.rdbuf(old);
    fs::current_path(here);
    std::cout << captured.str();
    if (rc != 0 || !o.check) return rc;

    std::vector<std::string> problems;
    if (sha256Hex(captured.str()) != j["stdout_sha256"]) problems.push_back("stdout differs");
    std::string origDir = j["outdir"];
    fs::path newDir = outdir;
    if (newDir.is_relative()) newDir = fs::path(std::string(j["cwd"])) / newDir;
    fs::path oldDir = origDir;
    if (oldDir.is_relative()) oldDir = fs::path(std::string(j["cwd"])) / oldDir;
    for (const auto& out : j["outputs"]) {
        fs::path was = std::string(out["path"]);
        if (was.is_relative()) was = fs::path(std::string(j["cwd"])) / was;
        auto rel = was.lexically_normal().lexically_relative(oldDir.lexically_normal());
        // Files written outside the output directory are compared in place.
        fs::path now = rel.empty() || *rel.begin() == ".." ? was : newDir / rel;
        if (!fs::exists(now))
            problems.push_back("missing " + now.string());
        else if (sha256File(now) != out["sha256"])
            problems.push_back("differs: " + now.string());
    }
    for (const auto& p : problems) std::cerr << "replay: " << p << "\n";
    if (!problems.empty()) return kExitMismatch;
    std::cerr << "replay: outputs identical\n";
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"Kantorovich-Rubinstein distances and barycenters", "krbary"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--outdir", g.outdir, "Directory for relative output paths and the manifest");
    app.add_option("--manifest", g.manifest, "Manifest path (default: <outdir>/<command>.manifest.json)");
    app.add_option("--jobs", g.jobs, "Parallel solves across C values")->check(CLI::PositiveNumber);

    std::optional<Command> chosen;
    int replayCode = -1;

    KrdistOpts kd;
    auto* sKd = app.add_subcommand("krdist", "KR distance between two measures");
    sKd->add_option("--mu", kd.mu)->required();
    sKd->add_option("--nu", kd.nu)->required();
    sKd->add_option("--p", kd.p)->required();
    sKd->add_option("--c", kd.C)->required();
    sKd->add_option("--plan", kd.plan, "Write the optimal sub-coupling as CSV");
    sKd->add_option("--dual", kd.dual, "Write the dual potentials as CSV");
    sKd->callback([&] { chosen = Command{"krdist", [&](RunRecord& r) { krdist(kd, r); }}; });

    BaryOpts bo;
    CurveOpts co;
    auto addCurveOptions = [&](CLI::App* s) {
        s->add_option("--measures", co.measures, "Measure files or glob patterns")->required();
        s->add_option("--p", co.p);
        s->add_option("--cmin", co.cmin);
        s->add_option("--cmax", co.cmax);
        s->add_option("--steps", co.steps);
        s->add_option("--final", co.final, "Finest grid, e.g. 128x128");
        s->add_option("--prune", co.prune);
        s->add_option("--box", co.box, "Grid box lo...,hi... (default: data hull padded by C)");
        s->add_option("--out", co.out, "CSV output (default: stdout)");
        s->add_option("--plot", co.plot, "SVG line plot");
    };
    auto* sKb = app.add_subcommand("krbary", "(p,C)-barycenter of several measures");
    sKb->add_option("--measures", bo.measures, "Measure files or glob patterns");
    sKb->add_option("--p", bo.p);
    sKb->add_option("--c", bo.C);
    sKb->add_option("--solver", bo.solver, "multiscale, lp or multimarginal");
    sKb->add_option("--grid", bo.grid, "Initial grid, e.g. 16x16, or auto");
    sKb->add_option("--final", bo.final, "Final grid, e.g. 128x128");
    sKb->add_option("--prune", bo.prune);
    sKb->add_option("--box", bo.box, "Grid box lo...,hi... (default: data hull padded by C)");
    sKb->add_option("--cap", bo.cap, "Enumeration cap for the exact solvers");
    sKb->add_option("--out", bo.out, "Barycenter file (.json or .csv)");
    sKb->add_option("--plot", bo.plot, "SVG of inputs and barycenter");
    sKb->add_option("--trace", bo.trace, "Per-level CSV trace");
    auto* sKbCurve = sKb->add_subcommand("masscurve", "Barycenter mass over a range of C");
    addCurveOptions(sKbCurve);
    sKbCurve->callback([&] { chosen = Command{"masscurve", [&](RunRecord& r) { masscurveCmd(co, g.jobs, r); }}; });
    sKb->callback([&] {
        if (chosen) return;
        if (bo.measures.empty()) throw CLI::RequiredError("--measures");
        if (bo.C == 0) throw CLI::RequiredError("--c");
        chosen = Command{"krbary", [&](RunRecord& r) { krbaryCmd(bo, r); }};
    });

    auto* sCurve = app.add_subcommand("masscurve", "Barycenter mass over a range of C");
    addCurveOptions(sCurve);
    sCurve->callback([&] { chosen = Command{"masscurve", [&](RunRecord& r) { masscurveCmd(co, g.jobs, r); }}; });

    TreeOpts to;
    auto* sTree = app.add_subcommand("tree-kr", "Closed-form KR distance on an ultrametric tree");
    sTree->add_option("--tree", to.tree)->required();
    sTree->add_option("--mu", to.mu)->required();
    sTree->add_option("--nu", to.nu)->required();
    sTree->add_option("--p", to.p)->required();
    sTree->add_option("--c", to.C)->required();
    sTree->add_flag("--lp", to.lp, "Also print the LP value on the tree metric");
    sTree->callback([&] { chosen = Command{"tree-kr", [&](RunRecord& r) { treeKr(to, r); }}; });

    BaselineOpts bl;
    auto* sBase = app.add_subcommand("baseline", "Entropic GHK and HK baselines");
    sBase->require_subcommand(1);
    for (auto [name, model] : {std::pair{"ghk", DivergenceModel::GHK}, std::pair{"hk", DivergenceModel::HK}}) {
        auto* m = sBase->add_subcommand(name, name == std::string("ghk") ? "Gaussian-Hellinger-Kantorovich" : "Hellinger-Kantorovich");
        m->require_subcommand(1);
        auto common = [&](CLI::App* s) {
            s->add_option("--param", bl.params, "lambda (ghk) or cut locus sigma (hk)");
            s->add_option("--eps", bl.eps, "Entropic regularization (default 1e-3 diam^2)");
            s->add_option("--max-iter", bl.maxIter);
            s->add_option("--tol", bl.tol);
        };
        auto* d = m->add_subcommand("dist", "Distance between two measures");
        common(d);
        d->add_option("--mu", bl.mu)->required();
        d->add_option("--nu", bl.nu)->required();
        std::string cmd = std::string("baseline-") + name;
        d->callback([&, model, cmd] {
            chosen = Command{cmd + "-dist", [&, model](RunRecord& r) { baselineDist(model, bl, r); }};
        });
        auto* b = m->add_subcommand("bary", "Fixed-grid barycenter");
        common(b);
        b->add_option("--measures", bl.measures)->required();
        b->add_option("--grid", bl.grid, "Support grid, e.g. 64x64");
        b->add_option("--box", bl.box, "Grid box x0,y0,x1,y1");
        b->add_option("--sweep", bl.sweep, "Parameter grid: four-squares or digits");
        b->add_option("--out", bl.out, "Output file, or directory when several parameters run");
        b->add_option("--plot", bl.plot, "SVG (single parameter only)");
        b->callback([&, model, cmd] {
            chosen = Command{cmd + "-bary", [&, model](RunRecord& r) { baselineBary(model, bl, r); }};
        });
    }

    GenOpts go;
    auto* sGen = app.add_subcommand("gen", "Synthetic datasets");
    sGen->require_subcommand(1);
    auto genCommon = [&](CLI::App* s) {
        s->add_option("--seed", go.seed);
        s->add_option("--out", go.out, "Output directory")->required();
        s->add_option("--format", go.format, "json or csv");
    };
    auto* gN = sGen->add_subcommand("nested", "Nested ellipses");
    genCommon(gN);
    gN->add_option("--count", go.count);
    gN->add_option("--ellipses", go.ellipses, "Ellipses per measure (0: uniform on 1..3)");
    gN->add_option("--points", go.points, "Points per ellipse");
    gN->add_option("--axis-min", go.axisMin);
    gN->add_option("--axis-max", go.axisMax);
    gN->callback([&] { chosen = Command{"gen-nested", [&](RunRecord& r) { genNested(go, r); }}; });
    auto* gC = sGen->add_subcommand("clustered", "Ellipses in five clusters with Poisson counts");
    genCommon(gC);
    gC->add_option("--count", go.count);
    gC->add_option("--points", go.points, "Points per ellipse");
    gC->add_option("--intensities", go.intensities, "Five Poisson intensities, centre first");
    gC->add_option("--half-width", go.halfWidth);
    gC->add_option("--axis-min", go.axisMin);
    gC->add_option("--axis-max", go.axisMax);
    gC->callback([&] { chosen = Command{"gen-clustered", [&](RunRecord& r) { genClustered(go, r); }}; });
    auto* gD = sGen->add_subcommand("distort", "Random deletion, addition, shift and reweighting of one measure");
    genCommon(gD);
    gD->add_option("--mu0", go.mu0)->required();
    gD->add_option("--count", go.count);
    gD->add_option("--preset", go.preset, "noisy: the standard noise levels");
    gD->add_option("--p-del", go.pDel);
    gD->add_option("--lambda-del", go.lambdaDel);
    gD->add_option("--p-add", go.pAdd);
    gD->add_option("--lambda-add", go.lambdaAdd);
    gD->add_option("--m-add", go.mAdd, "x,y");
    gD->add_option("--sigma-add", go.sigmaAdd, "Isotropic covariance s I");
    gD->add_option("--u0", go.u0);
    gD->add_option("--u1", go.u1);
    gD->add_option("--shift-box", go.shiftBox, "a1,a2,b1,b2");
    gD->add_option("--weight-change", go.weightChange, "l,u");
    gD->callback([&] { chosen = Command{"gen-distort", [&](RunRecord& r) { genDistort(go, r, *gD); }}; });
    auto* gS = sGen->add_subcommand("squares", "Four squares in the quadrants of an n x n grid");
    genCommon(gS);
    gS->add_option("--n", go.n);
    gS->add_option("--side", go.side);
    gS->callback([&] { chosen = Command{"gen-squares", [&](RunRecord& r) { genSquares(go, r); }}; });

    RenderOpts ro;
    auto* sRender = app.add_subcommand("render", "SVG scatter plot of 2-D measures or a curve CSV");
    sRender->add_option("--measures", ro.measures);
    sRender->add_option("--overlay", ro.overlay, "Measure drawn on top in black");
    sRender->add_option("--curve", ro.curve, "CSV with an x column and one or more y columns");
    sRender->add_option("--out", ro.out)->required();
    sRender->callback([&] { chosen = Command{"render", [&](RunRecord& r) { renderCmd(ro, r); }}; });

    ReplayOpts rp;
    auto* sReplay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
    sReplay->add_option("manifest", rp.manifest)->required();
    sReplay->add_flag("--check", rp.check, "Compare stdout and outputs with the recorded hashes");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }

    try {
        if (sReplay->parsed()) {
            replayCode = replayCmd(rp, g, app.count("--outdir") > 0);
            return replayCode;
        }
        if (!chosen) return kExitValidation;
        RunRecord rec(chosen->name, args, g.outdir);
        chosen->body(rec);
        fs::path manifest = g.manifest.empty() ? fs::path(g.outdir) / (chosen->name + ".manifest.json")
                                               : rec.output(g.manifest);
        io::writeFile(manifest, rec.manifest().dump(2) + "\n");
        std::cout << rec.out.str() << std::flush;
        return 0;
    } catch (const GuardError& e) {
        std::cerr << "error: " << e.what() << " (size guard; use a smaller instance or the multiscale solver)\n";
        return kExitGuard;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace cli
