#pragma once

#include <cstddef>
#include <span>
#include <vector>

// Sparse primal simplex for   min c^T x  s.t.  A x = b,  x >= 0.
namespace krbary::lp {

struct Entry {
    std::size_t row;
    double value;
};

class Model {
public:
    explicit Model(std::size_t rows = 0) : rhs_(rows, 0.0) {}

    std::size_t rows() const { return rhs_.size(); }
    std::size_t cols() const { return cost_.size(); }

    void setRhs(std::size_t row, double v) { rhs_[row] = v; }
    double rhs(std::size_t row) const { return rhs_[row]; }
    std::size_t addColumn(double cost, std::span<const Entry> entries);

    double cost(std::size_t j) const { return cost_[j]; }
    std::span<const std::size_t> columnRows(std::size_t j) const {
        return {index_.data() + start_[j], start_[j + 1] - start_[j]};
    }
    std::span<const double> columnValues(std::size_t j) const {
        return {value_.data() + start_[j], start_[j + 1] - start_[j]};
    }

private:
    std::vector<double> rhs_, cost_;
    std::vector<std::size_t> start_{0}, index_;
    std::vector<double> value_;
};

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

struct Options {
    std::size_t maxIterations = 0;  // 0: scaled with the problem size
    // Columns forming (part of) a primal feasible basis. Rows they leave
    // uncovered get artificial columns fixed at zero. Ignored if infeasible.
    std::vector<std::size_t> warmBasis;
};

struct Result {
    Status status = Status::Infeasible;
    double objective = 0.0;
    std::vector<double> x;      // one value per column
    std::vector<double> duals;  // one value per row; A^T y <= c at optimum
    std::size_t iterations = 0;
};

Result solve(const Model& model, const Options& options = {});

}  // namespace krbary::lp
