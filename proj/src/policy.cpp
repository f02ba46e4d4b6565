#include "tfl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tfl {
namespace {

void require(bool ok, const char* what) {
    if (!ok) {
        throw ConfigError(what);
    }
}

bool in_unit(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }
bool in_half_open_unit(double x) { return std::isfinite(x) && x >= 0.0 && x < 1.0; }

}  // namespace

std::string to_string(AggMethod m) {
    return m == AggMethod::kMedian ? "median" : "trimmed_mean";
}

AggMethod agg_method_from_string(const std::string& s) {
    if (s == "median") {
        return AggMethod::kMedian;
    }
    if (s == "trimmed_mean") {
        return AggMethod::kTrimmedMean;
    }
    throw ConfigError("unknown aggregation method '" + s + "'");
}

void PolicyConfig::validate() const {
    require(in_unit(tau_prob) && in_unit(tau_admit) && tau_prob < tau_admit,
            "policy: need 0 <= tau_prob < tau_admit <= 1");
    require(probation_cadence >= 1, "policy.probation_cadence must be >= 1");
    require(suspension_rounds >= 1, "policy.suspension_rounds must be >= 1");
    require(strikes_to_slash >= 1, "policy.strikes_to_slash must be >= 1");
    require(strike_window >= 1, "policy.strike_window must be >= 1");
    require(rehab_window >= 1, "policy.rehab_window must be >= 1");
    require(max_participants >= 1, "policy.max_participants must be >= 1");
    require(in_half_open_unit(probation_payout), "policy.probation_payout must be in [0, 1)");
    require(in_half_open_unit(slash_fraction), "policy.slash_fraction must be in [0, 1)");
    require(in_half_open_unit(trim), "policy.trim must be in [0, 1)");
    require(trim < 0.5, "policy.trim must be below 0.5");
    require(in_unit(tau_quality), "policy.tau_quality must be in [0, 1]");
    require(std::isfinite(rehab_cap) && rehab_cap > 0.0 && rehab_cap <= 1.0, "policy.rehab_cap must be in (0, 1]");
    require(round_budget >= 0, "policy.round_budget must be >= 0");
}

StatusKind kind_of(const NodeStatus& s) {
    return static_cast<StatusKind>(s.index());
}

std::string to_string(StatusKind k) {
    switch (k) {
        case StatusKind::kActive:
            return "active";
        case StatusKind::kProbation:
            return "probation";
        case StatusKind::kSuspended:
            return "suspended";
    }
    return "?";
}

StatusKind classify_status(double trust, const PolicyConfig& config) {
    if (trust >= config.tau_admit) {
        return StatusKind::kActive;
    }
    if (trust >= config.tau_prob) {
        return StatusKind::kProbation;
    }
    return StatusKind::kSuspended;
}

NodeStatus next_status(const NodeStatus& current, double trust, bool slashed, Round closed_round,
                       std::optional<Round> last_admitted, const PolicyConfig& config) {
    const Round fresh_until = closed_round + static_cast<Round>(config.suspension_rounds);
    if (slashed) {
        Round until = fresh_until;
        if (const auto* s = std::get_if<Suspended>(&current)) {
            until = std::max(until, s->until_round);
        }
        return Suspended{until};
    }
    if (const auto* s = std::get_if<Suspended>(&current)) {
        if (s->until_round > closed_round) {
            return *s;
        }
        // Lockout served: back to probation, re-entry only through recovery.
        return Probation{last_admitted};
    }
    switch (classify_status(trust, config)) {
        case StatusKind::kActive:
            return Active{};
        case StatusKind::kProbation:
            return Probation{last_admitted};
        case StatusKind::kSuspended:
            return Suspended{fresh_until};
    }
    return Active{};
}

void StrikeLedger::record(const NodeId& node, Round round) {
    auto& list = strikes_[node];
    if (!list.empty() && list.back().round >= round) {
        throw std::invalid_argument("StrikeLedger: strike rounds must be strictly increasing");
    }
    list.push_back({round, false});
}

namespace {

bool in_window(Round strike, Round round, int window) {
    // (round - window, round]
    return strike <= round && strike + static_cast<Round>(window) > round;
}

}  // namespace

std::size_t StrikeLedger::recent(const NodeId& node, Round round, int window) const {
    auto it = strikes_.find(node);
    if (it == strikes_.end()) {
        return 0;
    }
    return static_cast<std::size_t>(std::count_if(it->second.begin(), it->second.end(),
                                                  [&](const Strike& s) { return in_window(s.round, round, window); }));
}

std::size_t StrikeLedger::pending(const NodeId& node, Round round, int window) const {
    auto it = strikes_.find(node);
    if (it == strikes_.end()) {
        return 0;
    }
    return static_cast<std::size_t>(std::count_if(it->second.begin(), it->second.end(), [&](const Strike& s) {
        return !s.consumed && in_window(s.round, round, window);
    }));
}

void StrikeLedger::consume(const NodeId& node, Round round, int window) {
    auto it = strikes_.find(node);
    if (it == strikes_.end()) {
        return;
    }
    for (auto& s : it->second) {
        if (in_window(s.round, round, window)) {
            s.consumed = true;
        }
    }
}

std::span<const StrikeLedger::Strike> StrikeLedger::strikes(const NodeId& node) const {
    auto it = strikes_.find(node);
    if (it == strikes_.end()) {
        return {};
    }
    return it->second;
}

std::size_t StrikeLedger::total() const {
    std::size_t n = 0;
    for (const auto& [_, list] : strikes_) {
        n += list.size();
    }
    return n;
}

std::optional<SlashDecision> register_strike_and_check(StrikeLedger& ledger, const NodeId& node, Round round,
                                                       const PolicyConfig& config) {
    ledger.record(node, round);
    if (ledger.pending(node, round, config.strike_window) < static_cast<std::size_t>(config.strikes_to_slash)) {
        return std::nullopt;
    }
    ledger.consume(node, round, config.strike_window);
    return SlashDecision{config.slash_fraction, config.suspension_rounds, config.rehab_cap, config.rehab_window};
}

std::vector<NodeId> form_admission_set(std::span<const AdmissionCandidate> candidates, Round round,
                                       const PolicyConfig& config, OpCounter* counter) {
    std::vector<const AdmissionCandidate*> eligible;
    for (const auto& c : candidates) {
        bool ok = false;
        if (std::holds_alternative<Active>(c.status)) {
            ok = true;
        } else if (const auto* p = std::get_if<Probation>(&c.status)) {
            ok = !p->last_admitted_round || (round >= *p->last_admitted_round &&
                                             round - *p->last_admitted_round >=
                                                 static_cast<Round>(config.probation_cadence));
        } else {
            ok = std::get<Suspended>(c.status).until_round < round;
        }
        if (ok) {
            eligible.push_back(&c);
        }
    }
    std::sort(eligible.begin(), eligible.end(), [counter](const AdmissionCandidate* a, const AdmissionCandidate* b) {
        if (counter) {
            ++counter->comparisons;
        }
        if (a->trust != b->trust) {
            return a->trust > b->trust;
        }
        if (a->consistency != b->consistency) {
            return a->consistency > b->consistency;
        }
        if (a->recent_strikes != b->recent_strikes) {
            return a->recent_strikes < b->recent_strikes;
        }
        return a->id < b->id;
    });
    const std::size_t take = std::min(eligible.size(), static_cast<std::size_t>(config.max_participants));
    std::vector<NodeId> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        out.push_back(eligible[i]->id);
    }
    return out;
}

ScreenResult screen_update(double gain, double quality, const PolicyConfig& config) {
    return gain >= 0.0 && quality >= config.tau_quality ? ScreenResult::kAccept : ScreenResult::kReject;
}

namespace {

/// Largest-remainder split of `total` micro-tokens in proportion to weights.
/// Weights must be positive. Ties on the remainder go to the lower node id.
std::vector<MicroTokens> apportion(MicroTokens total, std::span<const double> weights, std::span<const NodeId> ids) {
    const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<MicroTokens> out(weights.size());
    std::vector<double> frac(weights.size());
    MicroTokens assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double quota = static_cast<double>(total) * (weights[i] / sum);
        const double base = std::floor(quota);
        out[i] = static_cast<MicroTokens>(base);
        frac[i] = quota - base;
        assigned += out[i];
    }
    std::vector<std::size_t> order(weights.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (frac[a] != frac[b]) {
            return frac[a] > frac[b];
        }
        return ids[a] < ids[b];
    });
    // Floating error can leave the floors a unit off either way.
    for (std::size_t k = 0; assigned < total; k = (k + 1) % order.size()) {
        ++out[order[k]];
        ++assigned;
    }
    for (std::size_t k = order.size(); assigned > total;) {
        k = (k == 0 ? order.size() : k) - 1;
        if (out[order[k]] > 0) {
            --out[order[k]];
            --assigned;
        }
    }
    return out;
}

}  // namespace

PayoutResult compute_payouts(std::span<const PayoutClaim> accepted, MicroTokens budget, double phi) {
    if (budget < 0) {
        throw std::invalid_argument("compute_payouts: negative budget");
    }
    PayoutResult result;
    result.withheld = budget;
    if (accepted.empty()) {
        return result;
    }

    std::vector<const PayoutClaim*> claims;
    for (const auto& c : accepted) {
        if (!(c.accuracy >= 0.0) || !(c.trust >= 0.0)) {
            throw std::invalid_argument("compute_payouts: negative utility component");
        }
        claims.push_back(&c);
    }
    std::sort(claims.begin(), claims.end(), [](const PayoutClaim* a, const PayoutClaim* b) { return a->id < b->id; });

    double total_utility = 0.0;
    for (const auto* c : claims) {
        result.payouts[c->id] = 0;
        total_utility += c->accuracy * c->trust;
    }
    if (!(total_utility > 0.0)) {
        return result;
    }

    MicroTokens probation_paid = 0;
    std::vector<double> free_weights;
    std::vector<NodeId> free_ids;
    for (const auto* c : claims) {
        const double utility = c->accuracy * c->trust;
        if (c->probation) {
            const double share = static_cast<double>(budget) * (utility / total_utility);
            const auto capped = static_cast<MicroTokens>(std::floor(phi * share));
            result.payouts[c->id] = capped;
            probation_paid += capped;
        } else if (utility > 0.0) {
            free_weights.push_back(utility);
            free_ids.push_back(c->id);
        }
    }

    const MicroTokens remaining = budget - probation_paid;
    if (free_ids.empty()) {
        result.withheld = remaining;
        return result;
    }
    const auto split = apportion(remaining, free_weights, free_ids);
    for (std::size_t i = 0; i < free_ids.size(); ++i) {
        result.payouts[free_ids[i]] = split[i];
    }
    result.withheld = 0;
    return result;
}

NodeId select_aggregator(std::span<const AggregatorCandidate> cluster) {
    if (cluster.empty()) {
        throw std::invalid_argument("select_aggregator: empty cluster");
    }
    const auto* best = &cluster.front();
    for (const auto& c : cluster) {
        if (c.trust != best->trust) {
            if (c.trust > best->trust) {
                best = &c;
            }
        } else if (c.consistency != best->consistency) {
            if (c.consistency > best->consistency) {
                best = &c;
            }
        } else if (c.id < best->id) {
            best = &c;
        }
    }
    return best->id;
}

}  // namespace tfl
