// oracle.hpp: exact Lindblad evolution of a few emitters and a truncated
// cavity mode, with moments reported in the cumulant state layout.

#pragma once

#include "cavsync/integrate.hpp"
#include "cavsync/model.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace cavsync {

class OracleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct OracleEmitter {
    double delta = 0.0;
    double g = 0.0;
};

inline constexpr std::size_t kOracleMaxDimension = 256;

struct SmallSystemSpec {
    int fock_cutoff = 1;  // n_max
    std::vector<OracleEmitter> emitters;
    PhysicalParams params;
    DrivePulse drive;

    [[nodiscard]] std::size_t dimension() const;
    void validate() const;
};

using DensityOperator = Eigen::MatrixXcd;

// Basis |n> (x) |s_1> ... |s_N>, index n * 2^N + bits, bit i set when emitter
// i is excited.
class OperatorBasis {
public:
    explicit OperatorBasis(const SmallSystemSpec& spec);
    [[nodiscard]] std::size_t dimension() const noexcept { return dim_; }
    [[nodiscard]] int n_emitters() const noexcept { return n_; }
    [[nodiscard]] int fock_cutoff() const noexcept { return n_max_; }
    [[nodiscard]] const Eigen::MatrixXcd& a() const noexcept { return a_; }
    [[nodiscard]] const Eigen::MatrixXcd& sm(int i) const { return sm_[static_cast<std::size_t>(i)]; }
    [[nodiscard]] const Eigen::MatrixXcd& sz(int i) const { return sz_[static_cast<std::size_t>(i)]; }
    [[nodiscard]] std::size_t index(int photons, unsigned bits) const;

private:
    int n_;
    int n_max_;
    std::size_t dim_;
    Eigen::MatrixXcd a_;
    std::vector<Eigen::MatrixXcd> sm_;
    std::vector<Eigen::MatrixXcd> sz_;
};

// rho -> -i[H(t), rho] + sum_j D[c_j] rho with c_j in {sqrt(kappa) a,
// sqrt(gamma) s-_i, sqrt(gamma_phi / 2) sz_i, sqrt(eta) s+_i}. Applied as an
// action on the density matrix; the superoperator is never formed.
class Liouvillian {
public:
    explicit Liouvillian(const SmallSystemSpec& spec);
    [[nodiscard]] const OperatorBasis& basis() const noexcept { return basis_; }
    [[nodiscard]] Eigen::MatrixXcd hamiltonian(double t) const;
    void apply(double t, const Eigen::Ref<const Eigen::MatrixXcd>& rho,
               Eigen::Ref<Eigen::MatrixXcd> out) const;

private:
    SmallSystemSpec spec_;
    OperatorBasis basis_;
    Eigen::MatrixXcd h0_;
    Eigen::MatrixXcd hd_;  // a + a+
    std::vector<Eigen::MatrixXcd> c_;
    std::vector<Eigen::MatrixXcd> cd_;
    Eigen::MatrixXcd k_;  // sum c+ c
};

Liouvillian build_liouvillian(const SmallSystemSpec& spec);

// Emitters with identical (delta, g) form one class, in order of first
// appearance.
struct OracleGrouping {
    std::vector<FrequencyClass> classes;
    std::vector<std::vector<int>> members;
};
OracleGrouping group_emitters(const SmallSystemSpec& spec);

// Product initial state: Fock |photons>, listed emitters excited.
struct OracleInitial {
    int photons = 0;
    std::vector<int> excited;
};
DensityOperator initial_density(const SmallSystemSpec& spec, const OracleInitial& init);

// Violations of Hermiticity, unit trace and positivity (empty when valid).
std::vector<std::string> check_density(const DensityOperator& rho, double herm_tol = 1e-10,
                                       double trace_tol = 1e-9, double eig_tol = 1e-9);

// Moments of rho, averaged over the members of each class, in the cumulant
// layout for group_emitters(spec).
CumulantState moments_from_density(const OperatorBasis& basis, const OracleGrouping& grouping,
                                   const DensityOperator& rho);

struct OracleResult {
    OracleGrouping grouping;
    TimeSeries series;                  // same channel names as the cumulant recorder
    std::vector<CumulantState> moments;  // one per grid point
    DensityOperator final_rho;
    int fock_cutoff = 0;
    double max_cutoff_population = 0.0;  // largest population of |n_max>
    double max_trace_drift = 0.0;
    IntegrationStats stats;
};

OracleResult evolve_exact(const SmallSystemSpec& spec, const DensityOperator& rho0, double t0,
                          double t1, std::span<const double> grid, const IntegratorConfig& config,
                          const ChannelSelection& selection = {});

// Raises the cutoff by 2 until two successive cutoffs agree on every channel
// to within change_tol (absolute); returns the result of the larger cutoff.
OracleResult evolve_adaptive(SmallSystemSpec spec, const OracleInitial& init, double t0,
                             double t1, std::span<const double> grid,
                             const IntegratorConfig& config,
                             const ChannelSelection& selection = {},
                             double change_tol = 1e-6);

struct ChannelDeviation {
    std::string name;
    double max_rel_deviation = 0.0;
    double time_of_max = 0.0;
    double reference_peak = 0.0;
};

struct ComparisonReport {
    std::vector<ChannelDeviation> channels;
    int fock_cutoff = 0;
    double max_cutoff_population = 0.0;

    [[nodiscard]] const ChannelDeviation& channel(const std::string& name) const;
};

// Deviation of each shared channel, normalized by the reference peak. sz
// channels are compared through the excitation (1 + sz)/2; re/im pairs are
// normalized by the peak modulus of the complex value.
ComparisonReport compare_series(const TimeSeries& model, const TimeSeries& reference);

void write_comparison_json(std::ostream& out, const ComparisonReport& report);

}  // namespace cavsync
