#pragma once

// Off-chain round orchestration: header publication, admission, collection,
// screening, trust update, aggregation, artifact publication and on-chain
// finalization.

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tfl/chain.hpp"
#include "tfl/content_store.hpp"
#include "tfl/evaluation.hpp"
#include "tfl/model.hpp"
#include "tfl/node_sim.hpp"
#include "tfl/policy.hpp"
#include "tfl/trust.hpp"

namespace tfl {

/// Switches used to build comparison baselines. Production runs keep both on.
struct Ablation {
    bool screening = true;       ///< false: every submission is accepted, no strikes
    bool trust_weights = true;   ///< false: aggregation weights are all 1
    friend bool operator==(const Ablation&, const Ablation&) = default;
};

struct ProtocolConfig {
    PolicyConfig policy;
    TrustParams trust;
    TrustWeights weights;
    Ablation ablation;
    std::uint64_t seed = 0;
    std::uint32_t deadline_ticks = 1;  ///< submissions arriving at or after this tick are dropped

    void validate() const;
};

struct NodeSpec {
    NodeId id;
    BehaviorPtr behavior;
    MicroTokens stake = 100 * kMicro;
    std::uint32_t latency_ticks = 0;
};

struct NodeRecord {
    NodeSpec spec;
    std::size_t data_index = 0;
    TrustState trust;
    double consistency = 0.5;
    double frequency = 1.0;
    NodeStatus status = Active{};
    std::optional<Round> last_admitted;
    std::deque<ParticipationRecord> participation;
    std::deque<double> utility_history;  ///< recent A values of submitted rounds
};

struct RoundHeader {
    Round round_id = 0;
    std::string config_hash;
    std::vector<NodeId> admitted;  ///< referenced by hash only in the artifact
    std::string admission_hash;
    std::string active_hash;
    std::string probation_hash;
    std::string suspended_hash;
    std::optional<Cid> prior_cid_model;
    std::optional<Cid> prior_cid_report;
    std::optional<NodeId> aggregator;

    nlohmann::json to_json() const;
};

struct NodeMetrics {
    double gain = 0.0;
    MetricVector metrics;
    double improvement = 0.0;
    double quality_hint = 0.0;
};

struct NodeRoundEntry {
    NodeId id;
    StatusKind status = StatusKind::kActive;  ///< at round start
    bool admitted = false;
    bool submitted = false;
    bool accepted = false;
    bool strike = false;
    std::optional<NodeMetrics> metrics;
    double trust_before = 0.0;
    double trust_after = 0.0;
    MicroTokens payout = 0;
    bool slash = false;
    MicroTokens slash_amount = 0;
};

struct RoundReport {
    Round round_id = 0;
    std::vector<NodeId> admitted;   ///< admission order
    std::vector<NodeId> submitted;  ///< ascending id
    std::vector<std::pair<NodeId, double>> accepted;  ///< (id, aggregation weight), ascending id
    std::vector<NodeRoundEntry> nodes;                ///< every registered node, ascending id
    std::optional<NodeId> aggregator;
    std::optional<NodeId> next_aggregator;
    MicroTokens budget = 0;
    MicroTokens withheld = 0;

    /// Canonical form: sorted keys, reals as micro-unit integers.
    nlohmann::json to_json() const;
};

/// Digest leaves recoverable from a serialized report: every accepted or
/// slashed node, ascending id.
std::vector<DigestLeaf> leaves_from_report(const nlohmann::json& report);

/// SHA-256 hex of the canonical JSON array of ids, in the given order.
std::string hash_id_list(const std::vector<NodeId>& ids);

/// Canonical dump: sorted keys, no insignificant whitespace, UTF-8.
std::string canonical_dump(const nlohmann::json& j);

/// round_half_even(amount * fraction) computed in integers (fraction in ppm).
MicroTokens fraction_of(MicroTokens amount, double fraction);

struct RoundOutcome {
    RoundHeader header;
    RoundReport report;
    Cid header_cid;
    Cid model_cid;
    Cid report_cid;
    FinalizeCall finalize;
    std::vector<DigestLeaf> leaves;
    double validation_loss = 0.0;
    OpCounter screening_aggregation_ops;  ///< median reference + screens + aggregation sorts
    std::size_t metric_evaluations = 0;
};

class Coordinator {
public:
    /// Nodes start Active with the configured initial trust; the global model
    /// starts at zero. `roster[i]` trains on `task.local[i]`.
    Coordinator(ProtocolConfig config, SyntheticTask task, std::vector<NodeSpec> roster, ContentStore& store,
                Contract& chain);

    /// Pure given the current state: same state, same bytes.
    RoundHeader publish_round_header(Round round_id) const;

    /// Runs one full round. On any chain failure every piece of coordinator
    /// and contract state is restored to the round start and the error is
    /// rethrown.
    RoundOutcome run_round(Round round_id);

    const ModelVector& global_model() const noexcept { return global_; }
    const std::map<NodeId, NodeRecord>& nodes() const noexcept { return nodes_; }
    const StrikeLedger& strikes() const noexcept { return ledger_; }
    const SyntheticTask& task() const noexcept { return task_; }
    const ProtocolConfig& config() const noexcept { return config_; }
    double current_validation_loss() const;

private:
    struct Snapshot;

    RoundOutcome execute(Round round_id);
    std::optional<NodeId> elect_aggregator() const;

    ProtocolConfig config_;
    SyntheticTask task_;
    ContentStore& store_;
    Contract& chain_;
    std::map<NodeId, NodeRecord> nodes_;
    StrikeLedger ledger_;
    ModelVector global_;
    std::optional<Cid> prior_model_;
    std::optional<Cid> prior_report_;
    std::optional<NodeId> aggregator_;
};

}  // namespace tfl
