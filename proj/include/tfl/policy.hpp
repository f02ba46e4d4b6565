#pragma once

// Deterministic policy decisions: status classification, admission, update
// screening, strike bookkeeping, payouts and aggregator election.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "tfl/types.hpp"

namespace tfl {

enum class AggMethod { kMedian, kTrimmedMean };

std::string to_string(AggMethod m);
AggMethod agg_method_from_string(const std::string& s);

/// Thresholds and constants of the admission, screening and reward/penalty
/// policy. Defaults are the shipped "paper-reference" profile.
struct PolicyConfig {
    double tau_admit = 0.40;
    double tau_prob = 0.25;
    int probation_cadence = 2;     ///< R
    int suspension_rounds = 2;     ///< H
    double tau_quality = 0.20;     ///< tau_D
    double probation_payout = 0.5; ///< phi
    int strikes_to_slash = 2;      ///< S
    int strike_window = 5;         ///< W
    double slash_fraction = 0.10;  ///< mu
    double rehab_cap = 0.60;       ///< T_cap
    int rehab_window = 5;          ///< W_rehab
    int max_participants = 64;     ///< K_max
    MicroTokens round_budget = 100 * kMicro;  ///< B_t
    double trim = 0.1;
    AggMethod agg_method = AggMethod::kMedian;

    void validate() const;

    friend bool operator==(const PolicyConfig&, const PolicyConfig&) = default;
};

struct Active {
    friend bool operator==(const Active&, const Active&) = default;
};
struct Probation {
    std::optional<Round> last_admitted_round;
    friend bool operator==(const Probation&, const Probation&) = default;
};
struct Suspended {
    Round until_round = 0;  ///< last round of the lockout, inclusive
    friend bool operator==(const Suspended&, const Suspended&) = default;
};
using NodeStatus = std::variant<Active, Probation, Suspended>;

enum class StatusKind { kActive, kProbation, kSuspended };

StatusKind kind_of(const NodeStatus& s);
std::string to_string(StatusKind k);

/// Threshold classification of a trust value.
StatusKind classify_status(double trust, const PolicyConfig& config);

/// Status a node carries into `next_round`, given its status during the
/// round that just closed, its post-update trust, and whether it was
/// slashed. Releases from suspension land in Probation regardless of trust.
NodeStatus next_status(const NodeStatus& current, double trust, bool slashed, Round closed_round,
                       std::optional<Round> last_admitted, const PolicyConfig& config);

class StrikeLedger {
public:
    struct Strike {
        Round round = 0;
        bool consumed = false;
        friend bool operator==(const Strike&, const Strike&) = default;
    };

    /// Appends a strike. Throws if `round` is not after the node's last strike.
    void record(const NodeId& node, Round round);
    /// Strikes in (round - window, round], consumed ones included.
    std::size_t recent(const NodeId& node, Round round, int window) const;
    /// Unconsumed strikes in (round - window, round].
    std::size_t pending(const NodeId& node, Round round, int window) const;
    /// Marks every unconsumed strike in (round - window, round] consumed.
    void consume(const NodeId& node, Round round, int window);

    std::span<const Strike> strikes(const NodeId& node) const;
    std::size_t total() const;

    friend bool operator==(const StrikeLedger&, const StrikeLedger&) = default;

private:
    std::map<NodeId, std::vector<Strike>> strikes_;
};

struct SlashDecision {
    double fraction = 0.0;
    int suspend_rounds = 0;
    double trust_cap = 1.0;
    int cap_rounds = 0;
    friend bool operator==(const SlashDecision&, const SlashDecision&) = default;
};

/// Records a failed screen and returns a slash decision once S unconsumed
/// strikes fall within the window; those strikes are then consumed.
std::optional<SlashDecision> register_strike_and_check(StrikeLedger& ledger, const NodeId& node, Round round,
                                                       const PolicyConfig& config);

struct AdmissionCandidate {
    NodeId id;
    double trust = 0.0;
    double consistency = 0.0;
    NodeStatus status;
    std::size_t recent_strikes = 0;
};

/// Eligible nodes ordered by descending trust, then consistency, then fewer
/// recent strikes, then node id; truncated to K_max.
std::vector<NodeId> form_admission_set(std::span<const AdmissionCandidate> candidates, Round round,
                                       const PolicyConfig& config, OpCounter* counter = nullptr);

enum class ScreenResult { kAccept, kReject };

ScreenResult screen_update(double gain, double quality, const PolicyConfig& config);

struct PayoutClaim {
    NodeId id;
    double accuracy = 0.0;  ///< normalized gain A in [0, 1]
    double trust = 0.0;     ///< screening-time trust
    bool probation = false;
};

struct PayoutResult {
    std::map<NodeId, MicroTokens> payouts;
    MicroTokens withheld = 0;
};

/// Splits the budget over accepted claims by utility A*T. Probation claims
/// get at most phi of their share; the excess goes to non-probation claims by
/// utility, or is withheld when there are none. Amounts are apportioned in
/// whole micro-tokens so that the total never exceeds the budget.
PayoutResult compute_payouts(std::span<const PayoutClaim> accepted, MicroTokens budget, double phi);

struct AggregatorCandidate {
    NodeId id;
    double trust = 0.0;
    double consistency = 0.0;
};

/// Highest trust, then highest consistency, then lowest id.
NodeId select_aggregator(std::span<const AggregatorCandidate> cluster);

}  // namespace tfl
