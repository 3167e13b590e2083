// SPDX-License-Identifier: Apache-2.0
//
// Core data types shared by every module: scenario configuration, channel
// realizations, surface phase state, the full allocation, and rate reports.
// Powers are watts, rates bit/s, distances meters. Indices are 0-based.

#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace irsnoma
{

using cplx = std::complex<double>;
using Vec3 = std::array<double, 3>;

double dbmToWatt(double dbm);
double wattToDbm(double watt);
double distance(const Vec3 &a, const Vec3 &b);

// Dense row-major 3-index table, used for every (user, BS, subchannel) quantity.
template <class T>
class Grid3
{
  public:
    Grid3() = default;
    Grid3(int n0, int n1, int n2, T init = T{})
        : n0_(n0), n1_(n1), n2_(n2), data_(static_cast<std::size_t>(n0) * n1 * n2, init)
    {
    }

    T &operator()(int a, int b, int c) { return data_[index(a, b, c)]; }
    const T &operator()(int a, int b, int c) const { return data_[index(a, b, c)]; }

    int dim0() const { return n0_; }
    int dim1() const { return n1_; }
    int dim2() const { return n2_; }
    bool sameShape(int n0, int n1, int n2) const { return n0_ == n0 && n1_ == n1 && n2_ == n2; }

    std::span<T> flat() { return data_; }
    std::span<const T> flat() const { return data_; }
    void fill(const T &v) { std::fill(data_.begin(), data_.end(), v); }

    bool operator==(const Grid3 &) const = default;

  private:
    std::size_t index(int a, int b, int c) const
    {
        return (static_cast<std::size_t>(a) * n1_ + b) * n2_ + c;
    }

    int n0_ = 0;
    int n1_ = 0;
    int n2_ = 0;
    std::vector<T> data_;
};

struct PathlossExponents
{
    double direct = 3.5;   // BS to user
    double bsIrs = 2.2;    // BS to surface
    double irsUser = 2.2;  // surface to user
};

struct NetworkConfig
{
    int numUsers = 6;
    int numBs = 3;
    int numSubchannels = 3;
    int numElements = 100;

    double bandwidth = 3e6;                    // Hz, split evenly over subchannels
    double noisePower = 1e-11;                 // W (-80 dBm)
    double minRate = 500e3;                    // bit/s per user
    double maxBsPower = 0.19952623149688797;   // W (23 dBm)
    int maxClusterSize = 2;
    double interThreshold = 1e-10;             // W (-70 dBm), initial inter-cell level
    double tolerance = 1e-4;
    int maxPowerIters = 50;
    int maxScaIters = 30;
    int maxOuterIters = 20;

    // Subchannels each BS requests in the initial many-to-many assignment, capped
    // at numSubchannels. A BS rejected by full subchannels ends with fewer. Swaps
    // keep every BS's holding count fixed.
    int subchannelsPerBs = 2;

    std::vector<Vec3> userPositions;
    std::vector<Vec3> bsPositions;
    Vec3 irsPosition{200.0, 50.0, 20.0};

    PathlossExponents exponents;
    double ricianFactor = 10.0;  // linear

    double subchannelBandwidth() const { return bandwidth / numSubchannels; }

    // Throws std::invalid_argument on the first violated invariant.
    void validate() const;
};

// User i at (50(i+1), 30, 0), BS j at (100(j+1), 0, 20), surface at (200, 50, 20).
void applyDefaultGeometry(NetworkConfig &cfg);
NetworkConfig defaultConfig();

// One fading realization for all links and subchannels.
struct ChannelSet
{
    int numUsers = 0;
    int numBs = 0;
    int numSubchannels = 0;
    int numElements = 0;

    Grid3<cplx> direct;                    // h(i, j, k)
    std::vector<Eigen::VectorXcd> bsToIrs;    // f(j, k), index j*K + k
    std::vector<Eigen::VectorXcd> irsToUser;  // g(i, k), index i*K + k

    ChannelSet() = default;
    ChannelSet(int users, int bss, int subchannels, int elements);

    const Eigen::VectorXcd &f(int j, int k) const { return bsToIrs[static_cast<std::size_t>(j) * numSubchannels + k]; }
    Eigen::VectorXcd &f(int j, int k) { return bsToIrs[static_cast<std::size_t>(j) * numSubchannels + k]; }
    const Eigen::VectorXcd &g(int i, int k) const { return irsToUser[static_cast<std::size_t>(i) * numSubchannels + k]; }
    Eigen::VectorXcd &g(int i, int k) { return irsToUser[static_cast<std::size_t>(i) * numSubchannels + k]; }

    // Copy with the surface removed (g = 0).
    ChannelSet withoutSurface() const;
    bool matches(const NetworkConfig &cfg) const;
    bool allFinite() const;
};

// Surface reflection state; nu_m = exp(j theta_m) with theta in [0, 2pi).
class PhaseConfig
{
  public:
    PhaseConfig() = default;
    explicit PhaseConfig(int elements);

    static PhaseConfig fromTheta(const Eigen::VectorXd &theta);
    // Entries are normalized to unit modulus; zero entries map to theta = 0.
    static PhaseConfig fromNu(const Eigen::VectorXcd &nu);

    int size() const { return static_cast<int>(theta_.size()); }
    const Eigen::VectorXd &theta() const { return theta_; }
    const Eigen::VectorXcd &nu() const { return nu_; }

  private:
    Eigen::VectorXd theta_;
    Eigen::VectorXcd nu_;
};

// The complete decision state of problem variables.
struct Allocation
{
    Eigen::MatrixXi assoc;  // alpha(i, j), I x J
    Eigen::MatrixXi subch;  // beta(j, k), J x K
    Grid3<double> power;    // p(i, j, k), W
    // Decoding sequence per (j, k) at index j*K + k, earliest-decoded first.
    std::vector<std::vector<int>> order;
    PhaseConfig phases;

    Allocation() = default;
    explicit Allocation(const NetworkConfig &cfg);

    int numUsers() const { return static_cast<int>(assoc.rows()); }
    int numBs() const { return static_cast<int>(assoc.cols()); }
    int numSubchannels() const { return static_cast<int>(subch.cols()); }

    bool served(int i, int j, int k) const { return assoc(i, j) == 1 && subch(j, k) == 1; }
    double effectivePower(int i, int j, int k) const { return served(i, j, k) ? power(i, j, k) : 0.0; }
    // Serving BS of user i, or -1 when the user is not associated exactly once.
    int bsOf(int i) const;
    std::vector<int> clusterOf(int j) const;
    std::vector<int> subchannelsOf(int j) const;
    std::vector<int> bssOn(int k) const;

    const std::vector<int> &decodeOrder(int j, int k) const
    {
        return order[static_cast<std::size_t>(j) * numSubchannels() + k];
    }
    std::vector<int> &decodeOrder(int j, int k) { return order[static_cast<std::size_t>(j) * numSubchannels() + k]; }
    // 1-based SIC position of user i in cluster (j, k); 0 when absent.
    int rank(int i, int j, int k) const;
};

struct RateReport
{
    Grid3<double> sinr;
    Grid3<double> rate;   // bit/s
    Grid3<double> intra;  // W
    Grid3<double> inter;  // W
    std::vector<double> perUserRate;
    double sumRate = 0.0;
};

// |H(i, j, k)|^2 for all links under one phase configuration.
using GainTable = Grid3<double>;

} // namespace irsnoma
