#pragma once

// Contract state machine: stake escrow, round finalization against a Merkle
// digest, reward distribution and in-finalization slashing. Every mutation
// appends to an event log from which the state can be rebuilt.

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "tfl/content_store.hpp"
#include "tfl/hashing.hpp"
#include "tfl/types.hpp"

#include <json.hpp>

namespace tfl {

class ChainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DigestLeaf {
    NodeId node_id;
    MicroTokens payout = 0;
    bool slash = false;
    MicroTokens slash_amount = 0;

    friend bool operator==(const DigestLeaf&, const DigestLeaf&) = default;
};

/// u32 BE byte length, UTF-8 id, i64 BE payout, u8 slash flag, i64 BE amount.
Bytes encode_leaf(const DigestLeaf& leaf);

/// Leaves must be strictly ascending by node id (throws ChainError
/// otherwise). Empty input gives the all-zero digest.
Digest merkle_root(std::span<const DigestLeaf> leaves);

/// The on-chain finalization arguments. Encoded size does not depend on the
/// model or on the number of contributors.
struct FinalizeCall {
    Round round_id = 0;
    Cid cid_model;
    Cid cid_report;
    Digest digest{};

    /// u64 BE round, 32-byte model CID, 32-byte report CID, 32-byte digest.
    Bytes encode() const;
};

struct Payout {
    NodeId node_id;
    MicroTokens amount = 0;
    friend bool operator==(const Payout&, const Payout&) = default;
};

namespace event {

struct Registered {
    NodeId node_id;
    std::string pubkey_hex;
    MicroTokens stake = 0;
    friend bool operator==(const Registered&, const Registered&) = default;
};
struct Slashed {
    Round round_id = 0;
    NodeId node_id;
    MicroTokens amount = 0;
    friend bool operator==(const Slashed&, const Slashed&) = default;
};
struct RoundFinalized {
    Round round_id = 0;
    Cid cid_model;
    Cid cid_report;
    Digest digest{};
    std::vector<Payout> payouts;  ///< pending until distribution
    friend bool operator==(const RoundFinalized&, const RoundFinalized&) = default;
};
struct Distributed {
    Round round_id = 0;
    std::vector<Payout> credits;
    MicroTokens to_treasury = 0;
    friend bool operator==(const Distributed&, const Distributed&) = default;
};

}  // namespace event

using EventBody = std::variant<event::Registered, event::Slashed, event::RoundFinalized, event::Distributed>;

struct Event {
    std::uint64_t seq = 0;
    EventBody body;
    friend bool operator==(const Event&, const Event&) = default;
};

nlohmann::json to_json(const Event& e);
Event event_from_json(const nlohmann::json& j);

struct Account {
    std::string pubkey_hex;
    MicroTokens stake = 0;
    MicroTokens balance = 0;
    friend bool operator==(const Account&, const Account&) = default;
};

struct RoundRecord {
    Round round_id = 0;
    Cid cid_model;
    Cid cid_report;
    Digest digest{};
    std::vector<Payout> pending;
    bool distributed = false;
    friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

struct ContractState {
    std::map<NodeId, Account> accounts;
    std::map<Round, RoundRecord> rounds;
    MicroTokens treasury = 0;
    MicroTokens total_escrowed = 0;  ///< sum of stakes at registration
    MicroTokens total_funded = 0;    ///< sum of round budgets released

    /// balances + stakes + treasury == escrowed + funded.
    bool conserves() const;

    friend bool operator==(const ContractState&, const ContractState&) = default;
};

/// Rebuilds contract state from an event log.
ContractState replay(std::span<const Event> events);

class Contract {
public:
    using Observer = std::function<void(const Contract&)>;

    explicit Contract(MicroTokens round_budget) : round_budget_(round_budget) {}

    void register_node(const NodeId& node, std::span<const std::uint8_t> pubkey, MicroTokens stake);

    /// Records the round, checks `leaves` against the committed digest and
    /// applies every slash they carry. Payouts wait for distribute_rewards.
    void finalize_round(const FinalizeCall& call, std::span<const DigestLeaf> leaves);

    /// Credits the round's payouts; the unspent budget goes to the treasury.
    void distribute_rewards(Round round_id);

    const ContractState& state() const noexcept { return state_; }
    std::span<const Event> events() const noexcept { return events_; }
    MicroTokens round_budget() const noexcept { return round_budget_; }
    std::optional<Account> account(const NodeId& node) const;

    /// Invoked after every successful mutating call.
    void set_observer(Observer observer) { observer_ = std::move(observer); }

    /// One JSON object per line, keys in sorted order.
    std::string events_jsonl() const;

private:
    void emit(EventBody body);
    void notify() const;

    MicroTokens round_budget_;
    ContractState state_;
    std::vector<Event> events_;
    Observer observer_;
};

}  // namespace tfl
