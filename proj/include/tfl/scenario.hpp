#pragma once

// Scenario configuration, the round loop, metrics emission and offline
// verification of a run directory.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "tfl/chain.hpp"
#include "tfl/content_store.hpp"
#include "tfl/coordinator.hpp"

namespace tfl {

inline constexpr const char* kReferenceProfile = "paper-reference";

struct TaskConfig {
    std::size_t dimension = 4;
    std::size_t samples_per_node = 32;
    double noise_std = 0.0;
};

struct ScenarioNode {
    NodeSpec spec;
    std::string pubkey_hex;  ///< empty: derived from the id
};

struct ScenarioConfig {
    std::uint64_t seed = 1;
    Round rounds = 20;
    TaskConfig task;
    std::vector<ScenarioNode> nodes;
    ProtocolConfig protocol;
    std::string out_dir;  ///< empty: caller decides

    void validate() const;
};

/// Parses a scenario document. Unknown fields and type errors are rejected
/// with a ConfigError naming the JSON path (e.g. "$.policy.tau_admit").
ScenarioConfig parse_scenario(const nlohmann::json& doc);
ScenarioConfig load_scenario(const std::filesystem::path& path);
nlohmann::json to_json(const ScenarioConfig& config);

/// Reference profile with an empty roster.
ScenarioConfig default_scenario();

nlohmann::json behavior_to_json(const NodeBehavior& behavior);
BehaviorPtr behavior_from_json(const nlohmann::json& j, const std::string& path = "$");

struct RoundSummary {
    Round round_id = 0;
    double validation_loss = 0.0;
    std::size_t admitted = 0;
    std::size_t submitted = 0;
    std::size_t accepted = 0;
    std::size_t strikes = 0;
    std::size_t slashes = 0;
    MicroTokens payouts = 0;
    MicroTokens withheld = 0;
    std::vector<std::pair<NodeId, double>> trust;  ///< post-round, ascending id

    static RoundSummary from_outcome(const RoundOutcome& outcome);
};

/// CSV: header row, then one row per round. Trust and token columns are
/// micro-unit integers; the loss is printed as shortest round-trip decimal.
void emit_metrics(std::ostream& os, const std::vector<NodeId>& nodes, const std::vector<RoundSummary>& rounds);

struct ScenarioResult {
    double initial_loss = 0.0;
    std::vector<RoundOutcome> rounds;
    std::vector<RoundSummary> summaries;
    std::vector<NodeId> node_ids;
    Contract chain{0};
    ContentStore store;
};

/// Registers the roster on a fresh contract and runs every round in memory.
/// `observer` sees the contract after each mutating call.
ScenarioResult simulate(const ScenarioConfig& config, Contract::Observer observer = {});

/// Writes metrics.csv, events.jsonl and artifacts/<cid> under `dir`.
void write_run(const ScenarioResult& result, const std::filesystem::path& dir);

struct VerifyReport {
    std::size_t rounds_checked = 0;
    std::vector<std::string> mismatches;
    bool ok() const { return mismatches.empty(); }
};

/// Recomputes every finalized round's digest from the stored report and
/// compares it with the contract event log.
VerifyReport verify_events(std::span<const Event> events, const ContentStore& store);
VerifyReport verify_run_dir(const std::filesystem::path& dir);

}  // namespace tfl
