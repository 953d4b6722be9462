#include "krbary/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <spdlog/spdlog.h>

#include "krbary/error.hpp"

namespace krbary::lp {

std::size_t Model::addColumn(double cost, std::span<const Entry> entries) {
    for (const auto& e : entries) {
        if (e.row >= rows()) throw ValidationError("row index out of range");
        if (e.value == 0.0) continue;
        index_.push_back(e.row);
        value_.push_back(e.value);
    }
    start_.push_back(index_.size());
    cost_.push_back(cost);
    return cost_.size() - 1;
}

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTiny = 1e-11;

struct ColumnView {
    std::span<const std::size_t> rows;
    std::span<const double> vals;
};

// LU factors of the basis in product form: Gaussian elimination with
// Markowitz pivoting (singletons first), then a file of column etas for the
// basis changes since the last factorization.
class Factor {
public:
    struct Defect {
        std::vector<std::size_t> slots;  // basis slots that could not be pivoted
        std::vector<std::size_t> rows;   // rows left without a pivot
    };

    Defect factor(std::size_t m, const std::vector<ColumnView>& cols) {
        m_ = m;
        std::size_t k = cols.size();
        prow_.clear();
        pcol_.clear();
        piv_.clear();
        lStart_.assign(1, 0);
        lIdx_.clear();
        lVal_.clear();
        uStart_.assign(1, 0);
        uIdx_.clear();
        uVal_.clear();
        clearEtas();

        std::vector<std::vector<std::pair<std::size_t, double>>> rowE(m);
        std::vector<std::vector<std::size_t>> colR(k);
        for (std::size_t s = 0; s < k; ++s)
            for (std::size_t t = 0; t < cols[s].rows.size(); ++t) {
                rowE[cols[s].rows[t]].push_back({s, cols[s].vals[t]});
                colR[s].push_back(cols[s].rows[t]);
            }
        std::vector<char> rowDone(m, 0), colDone(k, 0);
        std::vector<std::size_t> colSingles, rowSingles;
        for (std::size_t s = 0; s < k; ++s)
            if (colR[s].size() == 1) colSingles.push_back(s);
        for (std::size_t r = 0; r < m; ++r)
            if (rowE[r].size() == 1) rowSingles.push_back(r);
        std::vector<std::size_t> upos(k, kNone), seen(k, 0);
        std::size_t stamp = 0;
        Defect defect;

        auto valueAt = [&](std::size_t r, std::size_t c) {
            for (const auto& [j, v] : rowE[r])
                if (j == c) return v;
            return 0.0;
        };
        auto colMax = [&](std::size_t c) {
            double mx = 0.0;
            for (std::size_t r : colR[c]) mx = std::max(mx, std::abs(valueAt(r, c)));
            return mx;
        };

        std::size_t target = std::min(m, k);
        while (prow_.size() < target) {
            std::size_t pr = kNone, pc = kNone;
            while (pc == kNone && !colSingles.empty()) {
                std::size_t c = colSingles.back();
                colSingles.pop_back();
                if (colDone[c] || colR[c].size() != 1) continue;
                std::size_t r = colR[c][0];
                if (std::abs(valueAt(r, c)) > kTiny) {
                    pr = r;
                    pc = c;
                }
            }
            while (pc == kNone && !rowSingles.empty()) {
                std::size_t r = rowSingles.back();
                rowSingles.pop_back();
                if (rowDone[r] || rowE[r].size() != 1) continue;
                auto [c, v] = rowE[r][0];
                if (std::abs(v) > kTiny && std::abs(v) >= 0.01 * colMax(c)) {
                    pr = r;
                    pc = c;
                }
            }
            if (pc == kNone) {
                // Markowitz search over the sparsest few columns.
                std::size_t cmin = kNone;
                for (std::size_t c = 0; c < k; ++c)
                    if (!colDone[c] && !colR[c].empty()) cmin = std::min(cmin, colR[c].size());
                if (cmin == kNone) break;
                double bestCost = kInf, bestAbs = 0.0;
                int examined = 0;
                for (std::size_t c = 0; c < k && examined < 4; ++c) {
                    if (colDone[c] || colR[c].size() != cmin) continue;
                    ++examined;
                    double mx = colMax(c);
                    for (std::size_t r : colR[c]) {
                        double v = std::abs(valueAt(r, c));
                        if (v <= kTiny || v < 0.1 * mx) continue;
                        double cost = double(rowE[r].size() - 1) * double(cmin - 1);
                        if (cost < bestCost || (cost == bestCost && v > bestAbs)) {
                            bestCost = cost;
                            bestAbs = v;
                            pr = r;
                            pc = c;
                        }
                    }
                }
                if (pc == kNone) {
                    // Every remaining entry is negligible: numerically singular.
                    break;
                }
            }

            double pv = valueAt(pr, pc);
            prow_.push_back(pr);
            pcol_.push_back(pc);
            piv_.push_back(pv);
            std::size_t ubeg = uIdx_.size();
            for (const auto& [j, v] : rowE[pr]) {
                if (j == pc) continue;
                upos[j] = uIdx_.size();
                uIdx_.push_back(j);
                uVal_.push_back(v);
                auto& cr = colR[j];
                auto it = std::find(cr.begin(), cr.end(), pr);
                *it = cr.back();
                cr.pop_back();
            }
            std::size_t uend = uIdx_.size();
            uStart_.push_back(uend);

            for (std::size_t i : colR[pc]) {
                if (i == pr) continue;
                auto& row = rowE[i];
                double vic = 0.0;
                for (std::size_t t = 0; t < row.size(); ++t)
                    if (row[t].first == pc) {
                        vic = row[t].second;
                        row[t] = row.back();
                        row.pop_back();
                        break;
                    }
                double l = vic / pv;
                lIdx_.push_back(i);
                lVal_.push_back(l);
                ++stamp;
                for (auto& [j, v] : row)
                    if (upos[j] != kNone) {
                        v -= l * uVal_[upos[j]];
                        seen[j] = stamp;
                    }
                for (std::size_t t = ubeg; t < uend; ++t) {
                    std::size_t j = uIdx_[t];
                    if (seen[j] == stamp) continue;
                    row.push_back({j, -l * uVal_[t]});
                    colR[j].push_back(i);
                }
                if (row.size() == 1) rowSingles.push_back(i);
            }
            lStart_.push_back(lIdx_.size());
            for (std::size_t t = ubeg; t < uend; ++t) {
                std::size_t j = uIdx_[t];
                upos[j] = kNone;
                if (colR[j].size() == 1) colSingles.push_back(j);
            }
            rowDone[pr] = 1;
            colDone[pc] = 1;
            rowE[pr].clear();
            colR[pc].clear();
        }
        for (std::size_t c = 0; c < k; ++c)
            if (!colDone[c]) defect.slots.push_back(c);
        for (std::size_t r = 0; r < m; ++r)
            if (!rowDone[r]) defect.rows.push_back(r);
        return defect;
    }

    // work: dense over rows (destroyed); out: dense over slots.
    void ftran(std::vector<double>& work, std::vector<double>& out) const {
        std::size_t K = prow_.size();
        for (std::size_t k = 0; k < K; ++k) {
            double t = work[prow_[k]];
            if (t == 0.0) continue;
            for (std::size_t q = lStart_[k]; q < lStart_[k + 1]; ++q) work[lIdx_[q]] -= lVal_[q] * t;
        }
        for (std::size_t k = K; k-- > 0;) {
            double s = work[prow_[k]];
            for (std::size_t q = uStart_[k]; q < uStart_[k + 1]; ++q) s -= uVal_[q] * out[uIdx_[q]];
            out[pcol_[k]] = s / piv_[k];
        }
        for (std::size_t e = 0; e < etaP_.size(); ++e) {
            std::size_t p = etaP_[e];
            double xp = out[p] / etaPiv_[e];
            out[p] = xp;
            if (xp == 0.0) continue;
            for (std::size_t q = etaStart_[e]; q < etaStart_[e + 1]; ++q) out[etaIdx_[q]] -= etaVal_[q] * xp;
        }
    }

    // work: dense over slots (destroyed); out: dense over rows.
    void btran(std::vector<double>& work, std::vector<double>& out) const {
        for (std::size_t e = etaP_.size(); e-- > 0;) {
            std::size_t p = etaP_[e];
            double s = work[p];
            for (std::size_t q = etaStart_[e]; q < etaStart_[e + 1]; ++q) s -= etaVal_[q] * work[etaIdx_[q]];
            work[p] = s / etaPiv_[e];
        }
        std::size_t K = prow_.size();
        for (std::size_t k = 0; k < K; ++k) {
            double z = work[pcol_[k]] / piv_[k];
            out[prow_[k]] = z;
            if (z == 0.0) continue;
            for (std::size_t q = uStart_[k]; q < uStart_[k + 1]; ++q) work[uIdx_[q]] -= uVal_[q] * z;
        }
        for (std::size_t k = K; k-- > 0;) {
            double s = out[prow_[k]];
            for (std::size_t q = lStart_[k]; q < lStart_[k + 1]; ++q) s -= lVal_[q] * out[lIdx_[q]];
            out[prow_[k]] = s;
        }
    }

    void pushEta(std::size_t p, const std::vector<double>& d) {
        etaP_.push_back(p);
        etaPiv_.push_back(d[p]);
        for (std::size_t i = 0; i < d.size(); ++i)
            if (i != p && std::abs(d[i]) > 1e-14) {
                etaIdx_.push_back(i);
                etaVal_.push_back(d[i]);
            }
        etaStart_.push_back(etaIdx_.size());
    }

    std::size_t etaCount() const { return etaP_.size(); }
    std::size_t etaNonzeros() const { return etaIdx_.size(); }

private:
    void clearEtas() {
        etaP_.clear();
        etaPiv_.clear();
        etaStart_.assign(1, 0);
        etaIdx_.clear();
        etaVal_.clear();
    }

    std::size_t m_ = 0;
    std::vector<std::size_t> prow_, pcol_;
    std::vector<double> piv_;
    std::vector<std::size_t> lStart_, lIdx_, uStart_, uIdx_;
    std::vector<double> lVal_, uVal_;
    std::vector<std::size_t> etaP_, etaStart_, etaIdx_;
    std::vector<double> etaPiv_, etaVal_;
};

class Simplex {
public:
    Simplex(const Model& model, const Options& opt) : A_(model), m_(model.rows()), n_(model.cols()) {
        artRow_.resize(m_);
        artSign_.resize(m_);
        for (std::size_t r = 0; r < m_; ++r) {
            artRow_[r] = r;
            artSign_[r] = model.rhs(r) >= 0 ? 1.0 : -1.0;
        }
        double cmax = 0.0;
        for (std::size_t j = 0; j < n_; ++j) cmax = std::max(cmax, std::abs(model.cost(j)));
        optTol_ = 1e-10 * std::max(1.0, cmax);
        double bmax = 0.0;
        for (std::size_t r = 0; r < m_; ++r) bmax = std::max(bmax, std::abs(model.rhs(r)));
        feasTol_ = 1e-9 * std::max(1.0, bmax);
        limit_ = opt.maxIterations ? opt.maxIterations : 50 * (m_ + n_) + 20000;
        slotOf_.assign(n_ + m_, kNone);
        cost_.assign(n_ + m_, 0.0);
        xB_.assign(m_, 0.0);
        y_.assign(m_, 0.0);
        d_.assign(m_, 0.0);
        workR_.assign(m_, 0.0);
        workS_.assign(m_, 0.0);
        warm_ = opt.warmBasis;
    }

    Result run() {
        Result res;
        bool feasible = !warm_.empty() && tryWarmStart();
        if (!feasible) {
            basis_.resize(m_);
            std::fill(slotOf_.begin(), slotOf_.end(), kNone);
            for (std::size_t r = 0; r < m_; ++r) {
                basis_[r] = n_ + r;
                slotOf_[n_ + r] = r;
            }
            artUpper_ = kInf;
            for (std::size_t j = 0; j < n_; ++j) cost_[j] = 0.0;
            for (std::size_t r = 0; r < m_; ++r) cost_[n_ + r] = 1.0;
            Status st = runPhase();
            if (st == Status::IterationLimit) return finish(st);
            double infeas = 0.0;
            for (std::size_t s = 0; s < m_; ++s)
                if (basis_[s] >= n_) infeas += std::max(0.0, xB_[s]);
            if (infeas > feasTol_ * std::max<double>(1.0, double(m_))) return finish(Status::Infeasible);
        }
        artUpper_ = 0.0;
        for (std::size_t j = 0; j < n_; ++j) cost_[j] = A_.cost(j);
        for (std::size_t r = 0; r < m_; ++r) cost_[n_ + r] = 0.0;
        return finish(runPhase());
    }

private:
    ColumnView column(std::size_t v) const {
        if (v < n_) return {A_.columnRows(v), A_.columnValues(v)};
        std::size_t r = v - n_;
        return {{&artRow_[r], 1}, {&artSign_[r], 1}};
    }

    double upper(std::size_t v) const { return v < n_ ? kInf : artUpper_; }

    bool tryWarmStart() {
        std::vector<std::size_t> cand;
        std::vector<char> used(n_, 0);
        for (std::size_t j : warm_)
            if (j < n_ && !used[j]) {
                used[j] = 1;
                cand.push_back(j);
            }
        if (cand.size() > m_) return false;
        std::vector<ColumnView> cols;
        for (std::size_t j : cand) cols.push_back(column(j));
        Factor probe;
        auto defect = probe.factor(m_, cols);
        std::vector<char> drop(cand.size(), 0);
        for (std::size_t s : defect.slots) drop[s] = 1;
        basis_.clear();
        std::fill(slotOf_.begin(), slotOf_.end(), kNone);
        for (std::size_t t = 0; t < cand.size(); ++t)
            if (!drop[t]) basis_.push_back(cand[t]);
        for (std::size_t r : defect.rows) basis_.push_back(n_ + r);
        if (basis_.size() != m_) return false;
        for (std::size_t s = 0; s < m_; ++s) slotOf_[basis_[s]] = s;
        artUpper_ = 0.0;
        refactor();
        computePrimal();
        for (std::size_t s = 0; s < m_; ++s) {
            if (xB_[s] < -feasTol_) return false;
            if (basis_[s] >= n_ && std::abs(xB_[s]) > feasTol_) return false;
        }
        return true;
    }

    void refactor() {
        for (int attempt = 0; attempt < 3; ++attempt) {
            std::vector<ColumnView> cols(m_);
            for (std::size_t s = 0; s < m_; ++s) cols[s] = column(basis_[s]);
            auto defect = factor_.factor(m_, cols);
            if (defect.slots.empty()) return;
            spdlog::debug("simplex: singular basis, replacing {} columns", defect.slots.size());
            for (std::size_t t = 0; t < defect.slots.size(); ++t) {
                std::size_t s = defect.slots[t];
                slotOf_[basis_[s]] = kNone;
                basis_[s] = n_ + defect.rows[t];
                slotOf_[basis_[s]] = s;
            }
        }
        throw SolverError("simplex basis repair failed");
    }

    void computePrimal() {
        for (std::size_t r = 0; r < m_; ++r) workR_[r] = A_.rhs(r);
        factor_.ftran(workR_, xB_);
    }

    void computeDuals() {
        for (std::size_t s = 0; s < m_; ++s) workS_[s] = cost_[basis_[s]];
        factor_.btran(workS_, y_);
    }

    double reducedCost(std::size_t j) const {
        auto rows = A_.columnRows(j);
        auto vals = A_.columnValues(j);
        double rc = cost_[j];
        for (std::size_t t = 0; t < rows.size(); ++t) rc -= y_[rows[t]] * vals[t];
        return rc;
    }

    std::size_t price() const {
        std::size_t best = kNone;
        double bestRc = -optTol_;
        for (std::size_t j = 0; j < n_; ++j) {
            if (slotOf_[j] != kNone) continue;
            double rc = reducedCost(j);
            if (bland_) {
                if (rc < -optTol_) return j;
            } else if (rc < bestRc) {
                bestRc = rc;
                best = j;
            }
        }
        return best;
    }

    std::size_t ratioTest(double& theta) const {
        const double pivTol = 1e-9;
        std::size_t leave = kNone;
        auto ratio = [&](std::size_t s, double slack) {
            if (d_[s] > pivTol) return (std::max(xB_[s], 0.0) + slack) / d_[s];
            if (d_[s] < -pivTol && upper(basis_[s]) < kInf)
                return (std::max(upper(basis_[s]) - xB_[s], 0.0) + slack) / -d_[s];
            return kInf;
        };
        if (bland_) {
            double tmin = kInf;
            for (std::size_t s = 0; s < m_; ++s) tmin = std::min(tmin, ratio(s, 0.0));
            if (tmin == kInf) return kNone;
            for (std::size_t s = 0; s < m_; ++s)
                if (ratio(s, 0.0) <= tmin + 1e-12 && (leave == kNone || basis_[s] < basis_[leave])) leave = s;
            theta = tmin;
            return leave;
        }
        // Harris: relaxed bound first, then the largest pivot within it.
        double bound = kInf;
        for (std::size_t s = 0; s < m_; ++s) bound = std::min(bound, ratio(s, feasTol_));
        if (bound == kInf) return kNone;
        double bestPiv = 0.0;
        for (std::size_t s = 0; s < m_; ++s) {
            double r = ratio(s, 0.0);
            if (r == kInf || r > bound) continue;
            double a = std::abs(d_[s]);
            if (a > bestPiv || (a == bestPiv && basis_[s] < basis_[leave])) {
                bestPiv = a;
                leave = s;
                theta = r;
            }
        }
        return leave;
    }

    Status runPhase() {
        refactor();
        computePrimal();
        std::size_t degenerate = 0;
        const std::size_t degenerateLimit = 50 + m_ / 4;
        bool fresh = true;
        bland_ = false;
        for (;;) {
            if (iterations_ >= limit_) return Status::IterationLimit;
            if (factor_.etaCount() >= 100 || factor_.etaNonzeros() > 20 * m_ + 1000) {
                refactor();
                computePrimal();
                fresh = true;
            }
            computeDuals();
            std::size_t q = price();
            if (q == kNone) {
                if (fresh) return Status::Optimal;
                refactor();
                computePrimal();
                fresh = true;
                continue;
            }
            auto col = column(q);
            std::fill(workR_.begin(), workR_.end(), 0.0);
            for (std::size_t t = 0; t < col.rows.size(); ++t) workR_[col.rows[t]] = col.vals[t];
            factor_.ftran(workR_, d_);
            double theta = 0.0;
            std::size_t p = ratioTest(theta);
            if (p == kNone) return Status::Unbounded;

            for (std::size_t s = 0; s < m_; ++s)
                if (d_[s] != 0.0) xB_[s] -= theta * d_[s];
            std::size_t out = basis_[p];
            slotOf_[out] = kNone;
            basis_[p] = q;
            slotOf_[q] = p;
            xB_[p] = theta;
            factor_.pushEta(p, d_);
            fresh = false;
            ++iterations_;

            if (theta * std::abs(d_[p]) <= 1e-12) {
                if (++degenerate > degenerateLimit) bland_ = true;
            } else {
                degenerate = 0;
                bland_ = false;
            }
        }
    }

    Result finish(Status st) {
        Result res;
        res.status = st;
        res.iterations = iterations_;
        res.x.assign(n_, 0.0);
        for (std::size_t s = 0; s < m_; ++s)
            if (basis_[s] < n_) res.x[basis_[s]] = std::max(0.0, xB_[s]);
        for (std::size_t j = 0; j < n_; ++j) res.objective += A_.cost(j) * res.x[j];
        res.duals = y_;
        spdlog::debug("simplex: {} rows, {} cols, {} iterations, objective {}", m_, n_, iterations_, res.objective);
        return res;
    }

    const Model& A_;
    std::size_t m_, n_;
    std::vector<std::size_t> artRow_;
    std::vector<double> artSign_;
    double optTol_ = 1e-10, feasTol_ = 1e-9, artUpper_ = kInf;
    std::size_t limit_ = 0, iterations_ = 0;
    bool bland_ = false;
    std::vector<std::size_t> basis_, slotOf_, warm_;
    std::vector<double> cost_, xB_, y_, d_, workR_, workS_;
    Factor factor_;
};

}  // namespace

Result solve(const Model& model, const Options& options) {
    if (model.rows() == 0) {
        Result r;
        r.status = Status::Optimal;
        r.x.assign(model.cols(), 0.0);
        for (std::size_t j = 0; j < model.cols(); ++j)
            if (model.cost(j) < 0) r.status = Status::Unbounded;
        return r;
    }
    Simplex s(model, options);
    return s.run();
}

}  // namespace krbary::lp
