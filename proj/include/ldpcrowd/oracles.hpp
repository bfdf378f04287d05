// Copyright 2026 The ldpcrowd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Local-differential-privacy frequency oracles over zone indices.
//
// Each mechanism is a perturb/aggregate pair. Clients call `perturb` on their
// own zone; the aggregator feeds the resulting reports to an `Aggregator`,
// whose state is a set of integer tallies, so partial aggregators merge in
// any order with identical results.

#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include <ldpcrowd/domain.hpp>
#include <ldpcrowd/random.hpp>

namespace ldpcrowd {

struct OlhReport
{
    std::uint64_t hash_seed = 0;
    std::uint64_t value = 0;
    friend bool operator==(const OlhReport&, const OlhReport&) = default;
};

struct OueReport
{
    std::vector<bool> bits;
    friend bool operator==(const OueReport&, const OueReport&) = default;
};

struct TheReport
{
    std::vector<double> values;
    friend bool operator==(const TheReport&, const TheReport&) = default;
};

struct HrReport
{
    std::uint64_t row_index = 0;
    double signed_value = 0.0;
    friend bool operator==(const HrReport&, const HrReport&) = default;
};

struct CmsReport
{
    std::uint64_t hash_index = 0;
    std::vector<bool> sketch_row;
    friend bool operator==(const CmsReport&, const CmsReport&) = default;
};

struct RapporReport
{
    std::uint64_t cohort = 0;
    std::vector<bool> bits;
    friend bool operator==(const RapporReport&, const RapporReport&) = default;
};

using Report = std::variant<OlhReport, OueReport, TheReport, HrReport, CmsReport, RapporReport>;

Mechanism mechanism_of(const Report& report);

struct PerturbProbabilities
{
    double p = 1.0;
    double q = 0.0;
};

/// Binary randomized response: keeps `bit` with probability e^eps/(e^eps+1).
int rr_bit(int bit, double epsilon, Rng& rng);

/// Debiased counts (counts - n q) / (p - q). Throws degenerate_probabilities
/// when p <= q.
template <class Derived>
FrequencyEstimate estimate_frequency(const Eigen::MatrixBase<Derived>& counts, std::size_t n,
                                     PerturbProbabilities probs)
{
    if (!(probs.p > probs.q)) {
        fail(ErrorCode::degenerate_probabilities, "estimate_frequency needs p > q");
    }
    const auto c = counts.template cast<double>().eval();
    if (c.size() > 0 && (c.maxCoeff() > static_cast<double>(n) || c.minCoeff() < 0.0)) {
        fail(ErrorCode::invalid_argument, "indicator counts must lie in [0, n]");
    }
    const double nq = static_cast<double>(n) * probs.q;
    CountVector raw = (c.array() - nq) / (probs.p - probs.q);
    return FrequencyEstimate::from_raw(std::move(raw), n);
}

/// The (p, q) each aggregator debiases with. HR returns its sign-flip pair,
/// CMS and RAPPOR their per-bit pair.
PerturbProbabilities probabilities_for(Mechanism mechanism, double epsilon,
                                       const PrivacyParams& params = {});

// OLH -------------------------------------------------------------------------

/// Hash range g = ceil(e^eps + 1), at least 2 and at most 2^32.
std::uint64_t olh_range(double epsilon);
std::uint64_t olh_hash(std::uint64_t hash_seed, ZoneIndex zone, std::uint64_t range);
OlhReport olh_perturb(ZoneIndex zone, double epsilon, Rng& rng);
FrequencyEstimate olh_aggregate(std::span<const Report> reports, std::size_t l_zones, double epsilon);

// OUE -------------------------------------------------------------------------

OueReport oue_perturb(ZoneIndex zone, std::size_t l_zones, double epsilon, Rng& rng);
FrequencyEstimate oue_aggregate(std::span<const Report> reports, std::size_t l_zones, double epsilon);

// THE -------------------------------------------------------------------------

/// Laplace scale used by histogram encoding.
inline double the_scale(double epsilon) { return 2.0 / epsilon; }
double laplace_cdf(double x, double scale);
double laplace_pdf(double x, double scale);
TheReport the_perturb(ZoneIndex zone, std::size_t l_zones, double epsilon, Rng& rng);
FrequencyEstimate the_aggregate(std::span<const Report> reports, std::size_t l_zones, double epsilon,
                                double theta);

// HR --------------------------------------------------------------------------

/// Smallest power of two >= l_zones + 1. Zone j uses Hadamard column j + 1.
std::size_t hr_dimension(std::size_t l_zones);
/// Sign of the Sylvester-Hadamard entry, (-1)^popcount(row & col).
inline int hadamard_sign(std::uint64_t row, std::uint64_t col)
{
    return (std::popcount(row & col) & 1) ? -1 : 1;
}
/// The orthonormal d x d matrix with entries d^{-1/2} (-1)^<x,y>.
Eigen::MatrixXd hadamard_matrix(std::size_t dim);
HrReport hr_perturb(ZoneIndex zone, std::size_t l_zones, double epsilon, Rng& rng);
FrequencyEstimate hr_aggregate(std::span<const Report> reports, std::size_t l_zones, double epsilon);

// CMS -------------------------------------------------------------------------

std::uint64_t cms_hash(std::uint64_t family_seed, std::uint64_t hash_index, ZoneIndex zone,
                       std::uint64_t width);
CmsReport cms_perturb(ZoneIndex zone, double epsilon, const PrivacyParams& params, Rng& rng);
FrequencyEstimate cms_aggregate(std::span<const Report> reports, std::size_t l_zones, double epsilon,
                                const PrivacyParams& params);

// RAPPOR ----------------------------------------------------------------------

/// Permanent randomized-response flip rate f for `hashes` Bloom bits.
double rappor_flip(double epsilon, std::size_t hashes = 1);
std::uint64_t rappor_hash(std::uint64_t family_seed, std::uint64_t cohort, std::size_t hash,
                          ZoneIndex zone, std::uint64_t bits);
RapporReport rappor_perturb(ZoneIndex zone, double epsilon, const PrivacyParams& params, Rng& rng);
FrequencyEstimate rappor_aggregate(std::span<const Report> reports, std::size_t l_zones,
                                   double epsilon, const PrivacyParams& params);

// Uniform mechanism contract --------------------------------------------------

Report perturb(ZoneIndex zone, std::size_t l_zones, const PrivacyParams& params, Rng& rng);

/// Exact probability (THE: density) that a client in `zone` emits `report`.
/// For OLH it is conditional on the report's hash seed, whose distribution
/// does not depend on the zone.
double report_likelihood(const Report& report, ZoneIndex zone, std::size_t l_zones,
                         const PrivacyParams& params);

/// Streaming aggregator. Holds only integer tallies.
class Aggregator
{
public:
    Aggregator(std::size_t l_zones, const PrivacyParams& params);

    /// Throws param_mismatch when the report's mechanism or dimensions
    /// disagree with the round parameters.
    void add(const Report& report);
    void merge(const Aggregator& other);
    FrequencyEstimate estimate() const;

    std::size_t report_count() const noexcept { return n_; }
    std::size_t zone_count() const noexcept { return l_zones_; }

private:
    using tally_matrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
    using tally_vector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

    FrequencyEstimate estimate_cms() const;
    FrequencyEstimate estimate_rappor() const;

    std::size_t l_zones_;
    PrivacyParams params_;
    std::size_t n_ = 0;
    // OLH/OUE/THE: per-zone support counts. HR: per-zone signed tallies.
    tally_vector zone_tally_;
    // CMS: k x m; RAPPOR: cohorts x bits.
    tally_matrix grid_;
    // CMS: reports per hash index; RAPPOR: reports per cohort.
    tally_vector group_sizes_;
    // CMS: per-zone bucket of each hash function, k x L.
    Eigen::Matrix<std::uint64_t, Eigen::Dynamic, Eigen::Dynamic> cms_buckets_;
};

FrequencyEstimate aggregate(std::span<const Report> reports, std::size_t l_zones,
                            const PrivacyParams& params);

/// Wire form: {"mech": "...", "payload": {...}}.
std::string report_to_json(const Report& report);
Report report_from_json(const std::string& line);

} // namespace ldpcrowd
