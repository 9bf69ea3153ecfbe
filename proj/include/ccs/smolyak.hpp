#pragma once

// Smolyak sparse-grid interpolation with Chebyshev polynomials on boxes.
//
// Nodes are nested Chebyshev-Gauss-Lobatto extrema; the basis is the matching
// set of Chebyshev tensor products, so the interpolation matrix is square and
// fitting is a single LU solve. The unit-cube part (nodes, degrees, LU) depends
// only on the levels and is shared between grids with different bounds.

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace ccs {

struct GridSpec {
    std::vector<double> lo;
    std::vector<double> hi;
    std::vector<int> levels;  // one per dimension; isotropic grids repeat the same value

    static GridSpec isotropic(std::vector<double> lo, std::vector<double> hi, int level);

    int dimension() const { return static_cast<int>(lo.size()); }
    int max_level() const;
    void validate() const;
    bool contains(std::span<const double> x, double tol = 0.0) const;

    bool operator==(const GridSpec&) const = default;
};

class SmolyakBasis {
public:
    explicit SmolyakBasis(std::vector<int> levels);

    // Shared instance per level vector.
    static std::shared_ptr<const SmolyakBasis> get(const std::vector<int>& levels);

    // Number of nodes for the given levels, computed without building anything.
    static std::size_t count(const std::vector<int>& levels);

    int dimension() const { return static_cast<int>(levels_.size()); }
    std::size_t size() const { return size_; }
    const std::vector<int>& levels() const { return levels_; }
    int max_degree(int k) const { return max_degree_[k]; }

    // Node n coordinate k in [-1, 1].
    double unit_node(std::size_t n, int k) const { return nodes_[n * dimension() + k]; }
    int degree(std::size_t m, int k) const { return degrees_[m * dimension() + k]; }
    const int* degrees(std::size_t m) const { return degrees_.data() + m * dimension(); }

    Eigen::VectorXd solve(const Eigen::VectorXd& values) const;

private:
    std::vector<int> levels_;
    std::size_t size_ = 0;
    std::vector<double> nodes_;
    std::vector<int> degrees_;
    std::vector<int> max_degree_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

// Basis functions (and optionally selected partial derivatives) at one point.
struct BasisPoint {
    std::vector<double> phi;
    std::vector<int> grad_dims;
    std::vector<double> dphi;   // dphi[g * size + m] = d phi_m / d x_{grad_dims[g]}
};

class SmolyakGrid {
public:
    explicit SmolyakGrid(GridSpec spec);

    const GridSpec& spec() const { return spec_; }
    const SmolyakBasis& basis() const { return *basis_; }
    std::size_t size() const { return basis_->size(); }
    int dimension() const { return spec_.dimension(); }

    // Node n mapped into the box.
    std::vector<double> node(std::size_t n) const;
    std::vector<std::vector<double>> nodes() const;

    void evaluate(std::span<const double> x, std::span<const int> grad_dims, BasisPoint& out) const;

private:
    GridSpec spec_;
    std::shared_ptr<const SmolyakBasis> basis_;
};

class Interpolant {
public:
    Interpolant() = default;
    Interpolant(std::shared_ptr<const SmolyakGrid> grid, Eigen::VectorXd coefficients);

    bool empty() const { return !grid_; }
    const SmolyakGrid& grid() const { return *grid_; }
    const std::shared_ptr<const SmolyakGrid>& grid_ptr() const { return grid_; }
    const GridSpec& spec() const { return grid_->spec(); }
    const Eigen::VectorXd& coefficients() const { return coef_; }

    double eval(std::span<const double> x) const;
    std::vector<double> gradient(std::span<const double> x) const;

    double eval(const BasisPoint& p) const;
    // Partial derivative along p.grad_dims[g].
    double partial(const BasisPoint& p, int g) const;

    // Plain-text form: header, dimension, levels, bounds, coefficients.
    void write(std::ostream& os) const;
    static Interpolant read(std::istream& is);

private:
    std::shared_ptr<const SmolyakGrid> grid_;
    Eigen::VectorXd coef_;
};

// Number of basis evaluations so far that fell outside their grid box.
long extrapolation_count();

std::vector<std::vector<double>> build_nodes(const GridSpec& spec);

Interpolant fit(std::shared_ptr<const SmolyakGrid> grid, std::span<const double> values);
Interpolant fit(const GridSpec& spec, std::span<const double> values);

} // namespace ccs
