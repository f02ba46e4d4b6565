#include "tfl/chain.hpp"

#include <algorithm>

namespace tfl {
namespace {

void put_be(Bytes& out, std::uint64_t v, int width) {
    for (int i = width - 1; i >= 0; --i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

Digest hash_pair(const Digest& left, const Digest& right) {
    std::array<std::uint8_t, 64> buf{};
    std::copy(left.begin(), left.end(), buf.begin());
    std::copy(right.begin(), right.end(), buf.begin() + 32);
    return sha256(buf);
}

nlohmann::json payouts_json(const std::vector<Payout>& payouts) {
    auto arr = nlohmann::json::array();
    for (const auto& p : payouts) {
        arr.push_back({{"amount", p.amount}, {"node", p.node_id.str()}});
    }
    return arr;
}

std::vector<Payout> payouts_from_json(const nlohmann::json& arr) {
    std::vector<Payout> out;
    for (const auto& p : arr) {
        out.push_back({NodeId(p.at("node").get<std::string>()), p.at("amount").get<MicroTokens>()});
    }
    return out;
}

}  // namespace

Bytes encode_leaf(const DigestLeaf& leaf) {
    Bytes out;
    const auto& id = leaf.node_id.str();
    put_be(out, id.size(), 4);
    out.insert(out.end(), id.begin(), id.end());
    put_be(out, static_cast<std::uint64_t>(leaf.payout), 8);
    out.push_back(leaf.slash ? 1 : 0);
    put_be(out, static_cast<std::uint64_t>(leaf.slash_amount), 8);
    return out;
}

Digest merkle_root(std::span<const DigestLeaf> leaves) {
    if (leaves.empty()) {
        return Digest{};
    }
    std::vector<Digest> level;
    level.reserve(leaves.size());
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        if (i > 0 && !(leaves[i - 1].node_id < leaves[i].node_id)) {
            throw ChainError("merkle_root: leaves must be strictly ascending by node id");
        }
        level.push_back(sha256(encode_leaf(leaves[i])));
    }
    while (level.size() > 1) {
        if (level.size() % 2 == 1) {
            level.push_back(level.back());
        }
        std::vector<Digest> next;
        next.reserve(level.size() / 2);
        for (std::size_t i = 0; i < level.size(); i += 2) {
            next.push_back(hash_pair(level[i], level[i + 1]));
        }
        level = std::move(next);
    }
    return level.front();
}

Bytes FinalizeCall::encode() const {
    Bytes out;
    put_be(out, round_id, 8);
    for (const Cid* cid : {&cid_model, &cid_report}) {
        const Digest raw = digest_from_hex(cid->str());
        out.insert(out.end(), raw.begin(), raw.end());
    }
    out.insert(out.end(), digest.begin(), digest.end());
    return out;
}

nlohmann::json to_json(const Event& e) {
    nlohmann::json j;
    j["seq"] = e.seq;
    std::visit(
        [&](const auto& body) {
            using T = std::decay_t<decltype(body)>;
            if constexpr (std::is_same_v<T, event::Registered>) {
                j["type"] = "Registered";
                j["node"] = body.node_id.str();
                j["pubkey"] = body.pubkey_hex;
                j["stake"] = body.stake;
            } else if constexpr (std::is_same_v<T, event::Slashed>) {
                j["type"] = "Slashed";
                j["round"] = body.round_id;
                j["node"] = body.node_id.str();
                j["amount"] = body.amount;
            } else if constexpr (std::is_same_v<T, event::RoundFinalized>) {
                j["type"] = "RoundFinalized";
                j["round"] = body.round_id;
                j["cid_model"] = body.cid_model.str();
                j["cid_report"] = body.cid_report.str();
                j["digest"] = to_hex(body.digest);
                j["payouts"] = payouts_json(body.payouts);
            } else {
                j["type"] = "Distributed";
                j["round"] = body.round_id;
                j["credits"] = payouts_json(body.credits);
                j["to_treasury"] = body.to_treasury;
            }
        },
        e.body);
    return j;
}

Event event_from_json(const nlohmann::json& j) {
    Event e;
    e.seq = j.at("seq").get<std::uint64_t>();
    const auto type = j.at("type").get<std::string>();
    if (type == "Registered") {
        e.body = event::Registered{NodeId(j.at("node").get<std::string>()), j.at("pubkey").get<std::string>(),
                                   j.at("stake").get<MicroTokens>()};
    } else if (type == "Slashed") {
        e.body = event::Slashed{j.at("round").get<Round>(), NodeId(j.at("node").get<std::string>()),
                                j.at("amount").get<MicroTokens>()};
    } else if (type == "RoundFinalized") {
        e.body = event::RoundFinalized{j.at("round").get<Round>(), Cid(j.at("cid_model").get<std::string>()),
                                       Cid(j.at("cid_report").get<std::string>()),
                                       digest_from_hex(j.at("digest").get<std::string>()),
                                       payouts_from_json(j.at("payouts"))};
    } else if (type == "Distributed") {
        e.body = event::Distributed{j.at("round").get<Round>(), payouts_from_json(j.at("credits")),
                                    j.at("to_treasury").get<MicroTokens>()};
    } else {
        throw std::invalid_argument("unknown event type '" + type + "'");
    }
    return e;
}

bool ContractState::conserves() const {
    MicroTokens held = treasury;
    for (const auto& [_, acct] : accounts) {
        held += acct.stake + acct.balance;
    }
    return held == total_escrowed + total_funded;
}

ContractState replay(std::span<const Event> events) {
    ContractState s;
    for (const auto& e : events) {
        std::visit(
            [&](const auto& body) {
                using T = std::decay_t<decltype(body)>;
                if constexpr (std::is_same_v<T, event::Registered>) {
                    s.accounts[body.node_id] = Account{body.pubkey_hex, body.stake, 0};
                    s.total_escrowed += body.stake;
                } else if constexpr (std::is_same_v<T, event::Slashed>) {
                    s.accounts.at(body.node_id).stake -= body.amount;
                    s.treasury += body.amount;
                } else if constexpr (std::is_same_v<T, event::RoundFinalized>) {
                    s.rounds[body.round_id] =
                        RoundRecord{body.round_id, body.cid_model, body.cid_report, body.digest, body.payouts, false};
                } else {
                    auto& rec = s.rounds.at(body.round_id);
                    rec.distributed = true;
                    MicroTokens funded = body.to_treasury;
                    for (const auto& c : body.credits) {
                        s.accounts.at(c.node_id).balance += c.amount;
                        funded += c.amount;
                    }
                    s.treasury += body.to_treasury;
                    s.total_funded += funded;
                }
            },
            e.body);
    }
    return s;
}

void Contract::register_node(const NodeId& node, std::span<const std::uint8_t> pubkey, MicroTokens stake) {
    if (state_.accounts.contains(node)) {
        throw ChainError("register_node: duplicate registration of " + node.str());
    }
    if (stake <= 0) {
        throw ChainError("register_node: stake must be positive");
    }
    Account acct{to_hex(pubkey), stake, 0};
    state_.accounts.emplace(node, acct);
    state_.total_escrowed += stake;
    emit(event::Registered{node, acct.pubkey_hex, stake});
    notify();
}

void Contract::finalize_round(const FinalizeCall& call, std::span<const DigestLeaf> leaves) {
    if (state_.rounds.contains(call.round_id)) {
        throw ChainError("finalize_round: round " + std::to_string(call.round_id) + " already finalized");
    }
    if (merkle_root(leaves) != call.digest) {
        throw ChainError("finalize_round: leaves do not match committed digest");
    }
    MicroTokens total_payout = 0;
    for (const auto& leaf : leaves) {
        auto it = state_.accounts.find(leaf.node_id);
        if (it == state_.accounts.end()) {
            throw ChainError("finalize_round: unknown node " + leaf.node_id.str());
        }
        if (leaf.payout < 0 || leaf.slash_amount < 0) {
            throw ChainError("finalize_round: negative amount for " + leaf.node_id.str());
        }
        if (leaf.slash != (leaf.slash_amount > 0)) {
            throw ChainError("finalize_round: slash flag and amount disagree for " + leaf.node_id.str());
        }
        if (leaf.slash_amount > it->second.stake) {
            throw ChainError("finalize_round: slash exceeds stake of " + leaf.node_id.str());
        }
        total_payout += leaf.payout;
    }
    if (total_payout > round_budget_) {
        throw ChainError("finalize_round: payouts exceed the round budget");
    }

    RoundRecord rec{call.round_id, call.cid_model, call.cid_report, call.digest, {}, false};
    for (const auto& leaf : leaves) {
        if (leaf.slash) {
            state_.accounts.at(leaf.node_id).stake -= leaf.slash_amount;
            state_.treasury += leaf.slash_amount;
            emit(event::Slashed{call.round_id, leaf.node_id, leaf.slash_amount});
        }
        if (leaf.payout > 0) {
            rec.pending.push_back({leaf.node_id, leaf.payout});
        }
    }
    state_.rounds.emplace(call.round_id, rec);
    emit(event::RoundFinalized{call.round_id, call.cid_model, call.cid_report, call.digest, rec.pending});
    notify();
}

void Contract::distribute_rewards(Round round_id) {
    auto it = state_.rounds.find(round_id);
    if (it == state_.rounds.end()) {
        throw ChainError("distribute_rewards: round " + std::to_string(round_id) + " not finalized");
    }
    auto& rec = it->second;
    if (rec.distributed) {
        throw ChainError("distribute_rewards: round " + std::to_string(round_id) + " already distributed");
    }
    MicroTokens paid = 0;
    for (const auto& p : rec.pending) {
        state_.accounts.at(p.node_id).balance += p.amount;
        paid += p.amount;
    }
    const MicroTokens rest = round_budget_ - paid;
    state_.treasury += rest;
    state_.total_funded += round_budget_;
    rec.distributed = true;
    emit(event::Distributed{round_id, rec.pending, rest});
    notify();
}

std::optional<Account> Contract::account(const NodeId& node) const {
    auto it = state_.accounts.find(node);
    if (it == state_.accounts.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::string Contract::events_jsonl() const {
    std::string out;
    for (const auto& e : events_) {
        out += to_json(e).dump();
        out += '\n';
    }
    return out;
}

void Contract::emit(EventBody body) {
    events_.push_back(Event{events_.size(), std::move(body)});
}

void Contract::notify() const {
    if (observer_) {
        observer_(*this);
    }
}

}  // namespace tfl
