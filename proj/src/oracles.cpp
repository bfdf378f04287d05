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

#include <ldpcrowd/oracles.hpp>

#include <algorithm>
#include <array>
#include <limits>

#include <Eigen/Cholesky>

#include <ldpcrowd/lasso.hpp>

namespace ldpcrowd {
namespace {

void check_zone(ZoneIndex zone, std::size_t l_zones)
{
    if (zone >= l_zones) {
        fail(ErrorCode::out_of_range, "zone index " + std::to_string(zone) + " outside 0.." +
                                          std::to_string(l_zones));
    }
}

void check_epsilon(double epsilon)
{
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        fail(ErrorCode::invalid_argument, "epsilon must be a positive finite number");
    }
}

PrivacyParams params_for(Mechanism m, double epsilon)
{
    PrivacyParams params;
    params.mechanism = m;
    params.epsilon = epsilon;
    return params;
}

// Probability that randomized response at `epsilon` keeps a bit.
double keep_probability(double epsilon)
{
    // e/(e+1) written to stay finite for large epsilon.
    return 1.0 / (1.0 + std::exp(-epsilon));
}

double olh_keep(double epsilon, std::uint64_t g)
{
    return std::exp(epsilon) / (std::exp(epsilon) + static_cast<double>(g) - 1.0);
}

double hr_scale(double epsilon)
{
    // (e^eps + 1) / (e^eps - 1)
    return 1.0 / std::tanh(epsilon / 2.0);
}

double laplace_sample(double scale, Rng& rng)
{
    double u = 0.0;
    do {
        u = rng.uniform() - 0.5;
    } while (u == -0.5);
    const double mag = -scale * std::log1p(-2.0 * std::abs(u));
    return u < 0.0 ? -mag : mag;
}

std::vector<std::size_t> rappor_bloom(std::uint64_t family_seed, std::uint64_t cohort,
                                      std::size_t hashes, ZoneIndex zone, std::uint64_t bits)
{
    std::vector<std::size_t> pos;
    pos.reserve(hashes);
    for (std::size_t i = 0; i < hashes; ++i) {
        pos.push_back(static_cast<std::size_t>(rappor_hash(family_seed, cohort, i, zone, bits)));
    }
    std::sort(pos.begin(), pos.end());
    pos.erase(std::unique(pos.begin(), pos.end()), pos.end());
    return pos;
}

[[noreturn]] void mismatch(const std::string& what)
{
    fail(ErrorCode::param_mismatch, what);
}

} // namespace

Mechanism mechanism_of(const Report& report)
{
    static constexpr std::array<Mechanism, 6> order = {Mechanism::olh, Mechanism::oue, Mechanism::the,
                                                       Mechanism::hr,  Mechanism::cms, Mechanism::rappor};
    return order[report.index()];
}

int rr_bit(int bit, double epsilon, Rng& rng)
{
    check_epsilon(epsilon);
    if (bit != 0 && bit != 1) fail(ErrorCode::invalid_argument, "rr_bit takes 0 or 1");
    return rng.bernoulli(keep_probability(epsilon)) ? bit : 1 - bit;
}

PerturbProbabilities probabilities_for(Mechanism mechanism, double epsilon, const PrivacyParams& params)
{
    check_epsilon(epsilon);
    switch (mechanism) {
        case Mechanism::olh: {
            const auto g = olh_range(epsilon);
            return {olh_keep(epsilon, g), 1.0 / static_cast<double>(g)};
        }
        case Mechanism::oue:
            return {0.5, 1.0 / (std::exp(epsilon) + 1.0)};
        case Mechanism::the: {
            const double beta = the_scale(epsilon);
            return {1.0 - laplace_cdf(params.the_theta - 1.0, beta),
                    1.0 - laplace_cdf(params.the_theta, beta)};
        }
        case Mechanism::hr: {
            const double p = keep_probability(epsilon);
            return {p, 1.0 - p};
        }
        case Mechanism::cms: {
            const double p = keep_probability(epsilon / 2.0);
            return {p, 1.0 - p};
        }
        case Mechanism::rappor: {
            const double f = rappor_flip(epsilon, params.rappor_hashes);
            return {1.0 - f / 2.0, f / 2.0};
        }
    }
    fail(ErrorCode::invalid_argument, "unknown mechanism");
}

// OLH -------------------------------------------------------------------------

std::uint64_t olh_range(double epsilon)
{
    check_epsilon(epsilon);
    constexpr double cap = 4294967296.0; // 2^32
    const double g = std::ceil(std::exp(epsilon) + 1.0 - 1e-9);
    if (!(g < cap)) return static_cast<std::uint64_t>(cap);
    return std::max<std::uint64_t>(2, static_cast<std::uint64_t>(g));
}

std::uint64_t olh_hash(std::uint64_t hash_seed, ZoneIndex zone, std::uint64_t range)
{
    return mix64(derive_key({hash_seed, zone})) % range;
}

OlhReport olh_perturb(ZoneIndex zone, double epsilon, Rng& rng)
{
    const auto g = olh_range(epsilon);
    OlhReport report;
    report.hash_seed = rng();
    const auto hashed = olh_hash(report.hash_seed, zone, g);
    if (rng.bernoulli(olh_keep(epsilon, g))) {
        report.value = hashed;
    } else {
        const auto other = rng.below(g - 1);
        report.value = other < hashed ? other : other + 1;
    }
    return report;
}

FrequencyEstimate olh_aggregate(std::span<const Report> reports, std::size_t l_zones, double epsilon)
{
    return aggregate(reports, l_zones, params_for(Mechanism::olh, epsilon));
}

// OUE -------------------------------------------------------------------------

OueReport oue_perturb(ZoneIndex zone, std::size_t l_zones, double epsilon, Rng& rng)
{
    check_zone(zone, l_zones);
    const auto probs = probabilities_for(Mechanism::oue, epsilon);
    OueReport report;
    report.bits.resize(l_zones);
    for (std::size_t i = 0; i < l_zones; ++i) {
        report.bits[i] = rng.bernoulli(i == zone ? probs.p : probs.q);
    }
    return report;
}

FrequencyEstimate oue_aggregate(std::span<const Report> reports, std::size_t l_zones, double epsilon)
{
    return aggregate(reports, l_zones, params_for(Mechanism::oue, epsilon));
}

// THE -------------------------------------------------------------------------

double laplace_cdf(double x, double scale)
{
    return x < 0.0 ? 0.5 * std::exp(x / scale) : 1.0 - 0.5 * std::exp(-x / scale);
}

double laplace_pdf(double x, double scale)
{
    return std::exp(-std::abs(x) / scale) / (2.0 * scale);
}

TheReport the_perturb(ZoneIndex zone, std::size_t l_zones, double epsilon, Rng& rng)
{
    check_zone(zone, l_zones);
    check_epsilon(epsilon);
    const double beta = the_scale(epsilon);
    TheReport report;
    report.values.resize(l_zones);
    for (std::size_t i = 0; i < l_zones; ++i) {
        report.values[i] = (i == zone ? 1.0 : 0.0) + laplace_sample(beta, rng);
    }
    return report;
}

FrequencyEstimate the_aggregate(std::span<const Report> reports, std::size_t l_zones, double epsilon,
                                double theta)
{
    auto params = params_for(Mechanism::the, epsilon);
    params.the_theta = theta;
    return aggregate(reports, l_zones, params);
}

// HR --------------------------------------------------------------------------

std::size_t hr_dimension(std::size_t l_zones)
{
    return std::bit_ceil(l_zones + 1);
}

Eigen::MatrixXd hadamard_matrix(std::size_t dim)
{
    if (!std::has_single_bit(dim)) fail(ErrorCode::invalid_argument, "Hadamard size must be 2^k");
    const auto d = static_cast<Eigen::Index>(dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    return Eigen::MatrixXd::NullaryExpr(d, d, [scale](Eigen::Index r, Eigen::Index c) {
        return scale * hadamard_sign(static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(c));
    });
}

HrReport hr_perturb(ZoneIndex zone, std::size_t l_zones, double epsilon, Rng& rng)
{
    check_zone(zone, l_zones);
    check_epsilon(epsilon);
    const auto dim = hr_dimension(l_zones);
    HrReport report;
    report.row_index = rng.below(dim);
    const int sign = hadamard_sign(report.row_index, zone + 1);
    const int b = rng.bernoulli(keep_probability(epsilon)) ? 1 : -1;
    report.signed_value = b * sign * hr_scale(epsilon) * std::sqrt(static_cast<double>(dim));
    return report;
}

FrequencyEstimate hr_aggregate(std::span<const Report> reports, std::size_t l_zones, double epsilon)
{
    return aggregate(reports, l_zones, params_for(Mechanism::hr, epsilon));
}

// CMS -------------------------------------------------------------------------

std::uint64_t cms_hash(std::uint64_t family_seed, std::uint64_t hash_index, ZoneIndex zone,
                       std::uint64_t width)
{
    return mix64(derive_key({family_seed, 0xc5ULL, hash_index, zone})) % width;
}

CmsReport cms_perturb(ZoneIndex zone, double epsilon, const PrivacyParams& params, Rng& rng)
{
    check_epsilon(epsilon);
    const auto probs = probabilities_for(Mechanism::cms, epsilon, params);
    CmsReport report;
    report.hash_index = rng.below(params.cms_k);
    const auto bucket = cms_hash(params.family_seed, report.hash_index, zone, params.cms_m);
    report.sketch_row.resize(params.cms_m);
    for (std::size_t l = 0; l < params.cms_m; ++l) {
        report.sketch_row[l] = rng.bernoulli(l == bucket ? probs.p : probs.q);
    }
    return report;
}

FrequencyEstimate cms_aggregate(std::span<const Report> reports, std::size_t l_zones, double epsilon,
                                const PrivacyParams& params)
{
    auto p = params;
    p.mechanism = Mechanism::cms;
    p.epsilon = epsilon;
    return aggregate(reports, l_zones, p);
}

// RAPPOR ----------------------------------------------------------------------

double rappor_flip(double epsilon, std::size_t hashes)
{
    check_epsilon(epsilon);
    if (hashes == 0) fail(ErrorCode::invalid_argument, "RAPPOR needs at least one hash");
    return 2.0 / (std::exp(epsilon / (2.0 * static_cast<double>(hashes))) + 1.0);
}

std::uint64_t rappor_hash(std::uint64_t family_seed, std::uint64_t cohort, std::size_t hash,
                          ZoneIndex zone, std::uint64_t bits)
{
    return mix64(derive_key({family_seed, 0x5a990ULL, cohort, hash, zone})) % bits;
}

RapporReport rappor_perturb(ZoneIndex zone, double epsilon, const PrivacyParams& params, Rng& rng)
{
    const auto probs = probabilities_for(Mechanism::rappor, epsilon, params);
    RapporReport report;
    report.cohort = rng.below(params.rappor_m);
    const auto bloom =
        rappor_bloom(params.family_seed, report.cohort, params.rappor_hashes, zone, params.rappor_k);
    report.bits.resize(params.rappor_k);
    for (std::size_t b = 0; b < params.rappor_k; ++b) {
        const bool set = std::binary_search(bloom.begin(), bloom.end(), b);
        report.bits[b] = rng.bernoulli(set ? probs.p : probs.q);
    }
    return report;
}

FrequencyEstimate rappor_aggregate(std::span<const Report> reports, std::size_t l_zones,
                                   double epsilon, const PrivacyParams& params)
{
    auto p = params;
    p.mechanism = Mechanism::rappor;
    p.epsilon = epsilon;
    return aggregate(reports, l_zones, p);
}

// Uniform contract ------------------------------------------------------------

Report perturb(ZoneIndex zone, std::size_t l_zones, const PrivacyParams& params, Rng& rng)
{
    check_zone(zone, l_zones);
    switch (params.mechanism) {
        case Mechanism::olh: return olh_perturb(zone, params.epsilon, rng);
        case Mechanism::oue: return oue_perturb(zone, l_zones, params.epsilon, rng);
        case Mechanism::the: return the_perturb(zone, l_zones, params.epsilon, rng);
        case Mechanism::hr: return hr_perturb(zone, l_zones, params.epsilon, rng);
        case Mechanism::cms: return cms_perturb(zone, params.epsilon, params, rng);
        case Mechanism::rappor: return rappor_perturb(zone, params.epsilon, params, rng);
    }
    fail(ErrorCode::invalid_argument, "unknown mechanism");
}

double report_likelihood(const Report& report, ZoneIndex zone, std::size_t l_zones,
                         const PrivacyParams& params)
{
    check_zone(zone, l_zones);
    if (mechanism_of(report) != params.mechanism) mismatch("report mechanism differs from params");
    const double eps = params.epsilon;
    const auto probs = probabilities_for(params.mechanism, eps, params);

    auto bit_product = [](const std::vector<bool>& bits, auto&& is_set, PerturbProbabilities pq) {
        double prob = 1.0;
        for (std::size_t i = 0; i < bits.size(); ++i) {
            const double one = is_set(i) ? pq.p : pq.q;
            prob *= bits[i] ? one : 1.0 - one;
        }
        return prob;
    };

    return std::visit(
        [&](const auto& r) -> double {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, OlhReport>) {
                const auto g = olh_range(eps);
                if (r.value >= g) return 0.0;
                const double denom = std::exp(eps) + static_cast<double>(g) - 1.0;
                return r.value == olh_hash(r.hash_seed, zone, g) ? std::exp(eps) / denom : 1.0 / denom;
            } else if constexpr (std::is_same_v<T, OueReport>) {
                if (r.bits.size() != l_zones) return 0.0;
                return bit_product(r.bits, [&](std::size_t i) { return i == zone; }, probs);
            } else if constexpr (std::is_same_v<T, TheReport>) {
                if (r.values.size() != l_zones) return 0.0;
                const double beta = the_scale(eps);
                double density = 1.0;
                for (std::size_t i = 0; i < l_zones; ++i) {
                    density *= laplace_pdf(r.values[i] - (i == zone ? 1.0 : 0.0), beta);
                }
                return density;
            } else if constexpr (std::is_same_v<T, HrReport>) {
                const auto dim = hr_dimension(l_zones);
                if (r.row_index >= dim || r.signed_value == 0.0) return 0.0;
                const int sign = hadamard_sign(r.row_index, zone + 1);
                const bool kept = (r.signed_value > 0.0) == (sign > 0);
                return (kept ? probs.p : probs.q) / static_cast<double>(dim);
            } else if constexpr (std::is_same_v<T, CmsReport>) {
                if (r.hash_index >= params.cms_k || r.sketch_row.size() != params.cms_m) return 0.0;
                const auto bucket = cms_hash(params.family_seed, r.hash_index, zone, params.cms_m);
                return bit_product(r.sketch_row, [&](std::size_t l) { return l == bucket; }, probs) /
                       static_cast<double>(params.cms_k);
            } else {
                if (r.cohort >= params.rappor_m || r.bits.size() != params.rappor_k) return 0.0;
                const auto bloom = rappor_bloom(params.family_seed, r.cohort, params.rappor_hashes,
                                                zone, params.rappor_k);
                return bit_product(
                           r.bits,
                           [&](std::size_t b) { return std::binary_search(bloom.begin(), bloom.end(), b); },
                           probs) /
                       static_cast<double>(params.rappor_m);
            }
        },
        report);
}

// Aggregator ------------------------------------------------------------------

Aggregator::Aggregator(std::size_t l_zones, const PrivacyParams& params)
    : l_zones_(l_zones), params_(params)
{
    if (l_zones == 0) fail(ErrorCode::invalid_argument, "aggregator needs at least one zone");
    params_.validate();
    const auto L = static_cast<Eigen::Index>(l_zones);
    zone_tally_ = tally_vector::Zero(L);
    switch (params_.mechanism) {
        case Mechanism::cms: {
            const auto k = static_cast<Eigen::Index>(params_.cms_k);
            grid_ = tally_matrix::Zero(k, static_cast<Eigen::Index>(params_.cms_m));
            group_sizes_ = tally_vector::Zero(k);
            cms_buckets_.resize(k, L);
            for (Eigen::Index j = 0; j < k; ++j) {
                for (Eigen::Index d = 0; d < L; ++d) {
                    cms_buckets_(j, d) = cms_hash(params_.family_seed, static_cast<std::uint64_t>(j),
                                                  static_cast<ZoneIndex>(d), params_.cms_m);
                }
            }
            break;
        }
        case Mechanism::rappor: {
            const auto m = static_cast<Eigen::Index>(params_.rappor_m);
            grid_ = tally_matrix::Zero(m, static_cast<Eigen::Index>(params_.rappor_k));
            group_sizes_ = tally_vector::Zero(m);
            break;
        }
        default: break;
    }
}

void Aggregator::add(const Report& report)
{
    if (mechanism_of(report) != params_.mechanism) {
        mismatch("report mechanism " + std::string(to_string(mechanism_of(report))) +
                 " differs from round mechanism " + std::string(to_string(params_.mechanism)));
    }
    std::visit(
        [&](const auto& r) {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, OlhReport>) {
                const auto g = olh_range(params_.epsilon);
                if (r.value >= g) mismatch("OLH value outside hash range");
                for (ZoneIndex d = 0; d < l_zones_; ++d) {
                    if (olh_hash(r.hash_seed, d, g) == r.value) ++zone_tally_[static_cast<Eigen::Index>(d)];
                }
            } else if constexpr (std::is_same_v<T, OueReport>) {
                if (r.bits.size() != l_zones_) mismatch("OUE report length differs from zone count");
                for (ZoneIndex d = 0; d < l_zones_; ++d) {
                    zone_tally_[static_cast<Eigen::Index>(d)] += r.bits[d] ? 1 : 0;
                }
            } else if constexpr (std::is_same_v<T, TheReport>) {
                if (r.values.size() != l_zones_) mismatch("THE report length differs from zone count");
                for (ZoneIndex d = 0; d < l_zones_; ++d) {
                    zone_tally_[static_cast<Eigen::Index>(d)] += r.values[d] >= params_.the_theta ? 1 : 0;
                }
            } else if constexpr (std::is_same_v<T, HrReport>) {
                if (r.row_index >= hr_dimension(l_zones_)) mismatch("HR row index out of range");
                if (r.signed_value == 0.0 || !std::isfinite(r.signed_value)) mismatch("HR value is zero");
                const int s = r.signed_value > 0.0 ? 1 : -1;
                for (ZoneIndex d = 0; d < l_zones_; ++d) {
                    zone_tally_[static_cast<Eigen::Index>(d)] += s * hadamard_sign(r.row_index, d + 1);
                }
            } else if constexpr (std::is_same_v<T, CmsReport>) {
                if (r.hash_index >= params_.cms_k) mismatch("CMS hash index exceeds k");
                if (r.sketch_row.size() != params_.cms_m) mismatch("CMS sketch row length differs from m");
                const auto j = static_cast<Eigen::Index>(r.hash_index);
                ++group_sizes_[j];
                for (std::size_t l = 0; l < r.sketch_row.size(); ++l) {
                    if (r.sketch_row[l]) ++grid_(j, static_cast<Eigen::Index>(l));
                }
            } else {
                if (r.cohort >= params_.rappor_m) mismatch("RAPPOR cohort exceeds m");
                if (r.bits.size() != params_.rappor_k) mismatch("RAPPOR bit vector length differs from k");
                const auto c = static_cast<Eigen::Index>(r.cohort);
                ++group_sizes_[c];
                for (std::size_t b = 0; b < r.bits.size(); ++b) {
                    if (r.bits[b]) ++grid_(c, static_cast<Eigen::Index>(b));
                }
            }
        },
        report);
    ++n_;
}

void Aggregator::merge(const Aggregator& other)
{
    const auto& a = params_;
    const auto& b = other.params_;
    if (other.l_zones_ != l_zones_ || a.mechanism != b.mechanism || a.epsilon != b.epsilon ||
        a.the_theta != b.the_theta || a.cms_k != b.cms_k || a.cms_m != b.cms_m ||
        a.rappor_k != b.rappor_k || a.rappor_m != b.rappor_m || a.rappor_hashes != b.rappor_hashes ||
        a.family_seed != b.family_seed) {
        mismatch("cannot merge aggregators of different rounds");
    }
    n_ += other.n_;
    zone_tally_ += other.zone_tally_;
    if (grid_.size() > 0) {
        grid_ += other.grid_;
        group_sizes_ += other.group_sizes_;
    }
}

FrequencyEstimate Aggregator::estimate() const
{
    if (n_ == 0) return FrequencyEstimate::from_raw(CountVector::Zero(static_cast<Eigen::Index>(l_zones_)), 0);
    const double eps = params_.epsilon;
    switch (params_.mechanism) {
        case Mechanism::olh:
        case Mechanism::oue:
        case Mechanism::the:
            return estimate_frequency(zone_tally_, n_, probabilities_for(params_.mechanism, eps, params_));
        case Mechanism::hr: {
            CountVector raw = zone_tally_.cast<double>() * hr_scale(eps);
            return FrequencyEstimate::from_raw(std::move(raw), n_);
        }
        case Mechanism::cms: return estimate_cms();
        case Mechanism::rappor: return estimate_rappor();
    }
    fail(ErrorCode::invalid_argument, "unknown mechanism");
}

FrequencyEstimate Aggregator::estimate_cms() const
{
    const auto L = static_cast<Eigen::Index>(l_zones_);
    if (n_ == 0) return FrequencyEstimate::from_raw(CountVector::Zero(L), 0);
    if (params_.cms_m < 2) fail(ErrorCode::invalid_argument, "CMS needs sketch width m >= 2");

    const auto probs = probabilities_for(Mechanism::cms, params_.epsilon, params_);
    const double k = static_cast<double>(params_.cms_k);
    const double m = static_cast<double>(params_.cms_m);
    const double n = static_cast<double>(n_);

    CountVector raw(L);
    for (Eigen::Index d = 0; d < L; ++d) {
        double sum = 0.0;
        for (Eigen::Index j = 0; j < grid_.rows(); ++j) {
            const auto bucket = static_cast<Eigen::Index>(cms_buckets_(j, d));
            const double observed = static_cast<double>(grid_(j, bucket));
            const double rows = static_cast<double>(group_sizes_[j]);
            sum += k * (observed - rows * probs.q) / (probs.p - probs.q);
        }
        raw[d] = (m / (m - 1.0)) * (sum / k - n / m);
    }
    return FrequencyEstimate::from_raw(std::move(raw), n_);
}

FrequencyEstimate Aggregator::estimate_rappor() const
{
    const auto L = static_cast<Eigen::Index>(l_zones_);
    if (n_ == 0) return FrequencyEstimate::from_raw(CountVector::Zero(L), 0);

    const auto probs = probabilities_for(Mechanism::rappor, params_.epsilon, params_);
    const double n = static_cast<double>(n_);

    // Design rows are (cohort, bit) pairs; column d has weight n_c/n on the
    // Bloom bits of zone d in cohort c, so the fitted coefficients are
    // population counts. Gram and right-hand side are accumulated per cohort
    // split: even cohorts fit, odd cohorts validate.
    Eigen::MatrixXd gram[2] = {Eigen::MatrixXd::Zero(L, L), Eigen::MatrixXd::Zero(L, L)};
    Eigen::VectorXd rhs[2] = {Eigen::VectorXd::Zero(L), Eigen::VectorXd::Zero(L)};
    std::size_t populated[2] = {0, 0};

    Eigen::MatrixXd bloom_hits(L, L);
    for (Eigen::Index c = 0; c < grid_.rows(); ++c) {
        const auto size = group_sizes_[c];
        if (size == 0) continue;
        const int split = static_cast<int>(c & 1);
        ++populated[split];
        const double w = static_cast<double>(size) / n;

        std::vector<std::vector<std::size_t>> blooms(l_zones_);
        for (ZoneIndex d = 0; d < l_zones_; ++d) {
            blooms[d] = rappor_bloom(params_.family_seed, static_cast<std::uint64_t>(c),
                                     params_.rappor_hashes, d, params_.rappor_k);
        }
        for (Eigen::Index d = 0; d < L; ++d) {
            const auto& bd = blooms[static_cast<std::size_t>(d)];
            double projected = 0.0;
            for (auto b : bd) {
                const double observed = static_cast<double>(grid_(c, static_cast<Eigen::Index>(b)));
                projected += (observed - static_cast<double>(size) * probs.q) / (probs.p - probs.q);
            }
            rhs[split][d] += w * projected;
            for (Eigen::Index e = 0; e <= d; ++e) {
                const auto& be = blooms[static_cast<std::size_t>(e)];
                std::vector<std::size_t> shared;
                std::set_intersection(bd.begin(), bd.end(), be.begin(), be.end(), std::back_inserter(shared));
                bloom_hits(d, e) = static_cast<double>(shared.size());
                bloom_hits(e, d) = bloom_hits(d, e);
            }
        }
        gram[split] += (w * w) * bloom_hits;
    }

    const Eigen::MatrixXd gram_all = gram[0] + gram[1];
    const Eigen::VectorXd rhs_all = rhs[0] + rhs[1];

    FrequencyEstimate est;
    std::vector<Eigen::Index> active;
    for (Eigen::Index d = 0; d < L; ++d) {
        if (gram_all(d, d) > 0.0) {
            active.push_back(d);
        } else {
            est.unfit_zones.push_back(static_cast<ZoneIndex>(d));
        }
    }

    CountVector raw = CountVector::Zero(L);
    if (params_.rappor_decoder == RapporDecoder::least_squares) {
        const auto a = static_cast<Eigen::Index>(active.size());
        Eigen::MatrixXd g(a, a);
        Eigen::VectorXd r(a);
        for (Eigen::Index i = 0; i < a; ++i) {
            r[i] = rhs_all[active[static_cast<std::size_t>(i)]];
            for (Eigen::Index j = 0; j < a; ++j) {
                g(i, j) = gram_all(active[static_cast<std::size_t>(i)], active[static_cast<std::size_t>(j)]);
            }
        }
        const Eigen::VectorXd x = g.ldlt().solve(r);
        for (Eigen::Index i = 0; i < a; ++i) raw[active[static_cast<std::size_t>(i)]] = x[i];
    } else {
        double lambda = 0.0;
        if (populated[0] > 0 && populated[1] > 0) {
            const double lambda_max = std::max(0.0, rhs[0].maxCoeff());
            static constexpr std::array<double, 5> grid = {0.0, 1e-4, 1e-3, 1e-2, 1e-1};
            double best = std::numeric_limits<double>::infinity();
            for (double frac : grid) {
                const double candidate = frac * lambda_max;
                const Eigen::VectorXd x = nonnegative_lasso(gram[0], rhs[0], candidate);
                const double loss = x.dot(gram[1] * x) - 2.0 * x.dot(rhs[1]);
                if (loss < best) {
                    best = loss;
                    lambda = candidate;
                }
            }
        }
        raw = nonnegative_lasso(gram_all, rhs_all, lambda);
        if (lambda > 0.0) {
            // Refit the selected zones without the penalty.
            Eigen::MatrixXd gram_sel = gram_all;
            Eigen::VectorXd rhs_sel = rhs_all;
            for (Eigen::Index d = 0; d < L; ++d) {
                if (raw[d] > 0.0) continue;
                gram_sel.row(d).setZero();
                gram_sel.col(d).setZero();
                rhs_sel[d] = 0.0;
            }
            raw = nonnegative_lasso(gram_sel, rhs_sel, 0.0);
        }
    }

    est.raw = raw;
    est.clamped = raw.cwiseMax(0.0);
    est.n_reports = n_;
    return est;
}

FrequencyEstimate aggregate(std::span<const Report> reports, std::size_t l_zones,
                            const PrivacyParams& params)
{
    Aggregator agg(l_zones, params);
    for (const auto& r : reports) agg.add(r);
    return agg.estimate();
}

} // namespace ldpcrowd
