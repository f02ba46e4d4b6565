#include "tfl/coordinator.hpp"

#include <algorithm>
#include <cmath>

#include "tfl/aggregation.hpp"

namespace tfl {
namespace {

using nlohmann::json;

json ids_json(const std::vector<NodeId>& ids) {
    auto arr = json::array();
    for (const auto& id : ids) {
        arr.push_back(id.str());
    }
    return arr;
}

json optional_id(const std::optional<NodeId>& id) {
    return id ? json(id->str()) : json(nullptr);
}

json optional_cid(const std::optional<Cid>& cid) {
    return cid ? json(cid->str()) : json(nullptr);
}

json protocol_json(const ProtocolConfig& c) {
    const auto& p = c.policy;
    const auto& t = c.trust;
    const auto& w = c.weights;
    return json{
        {"ablation", {{"screening", c.ablation.screening}, {"trust_weights", c.ablation.trust_weights}}},
        {"deadline_ticks", c.deadline_ticks},
        {"policy",
         {{"agg_method", to_string(p.agg_method)},
          {"max_participants", p.max_participants},
          {"probation_cadence", p.probation_cadence},
          {"probation_payout", to_micro(p.probation_payout)},
          {"rehab_cap", to_micro(p.rehab_cap)},
          {"rehab_window", p.rehab_window},
          {"round_budget", p.round_budget},
          {"slash_fraction", to_micro(p.slash_fraction)},
          {"strike_window", p.strike_window},
          {"strikes_to_slash", p.strikes_to_slash},
          {"suspension_rounds", p.suspension_rounds},
          {"tau_admit", to_micro(p.tau_admit)},
          {"tau_prob", to_micro(p.tau_prob)},
          {"tau_quality", to_micro(p.tau_quality)},
          {"trim", to_micro(p.trim)}}},
        {"trust",
         {{"eta", to_micro(t.eta)},
          {"freq_window", t.freq_window},
          {"initial_consistency", to_micro(t.initial_consistency)},
          {"initial_frequency", to_micro(t.initial_frequency)},
          {"initial_trust", to_micro(t.initial_trust)},
          {"lambda", to_micro(t.lambda)},
          {"rho", to_micro(t.rho)},
          {"sigma", to_micro(t.sigma)},
          {"t_max", to_micro(t.t_max)}}},
        {"weights",
         {{"alpha", to_micro(w.alpha)}, {"beta", to_micro(w.beta)}, {"delta", to_micro(w.delta)},
          {"gamma", to_micro(w.gamma)}}},
    };
}

}  // namespace

void ProtocolConfig::validate() const {
    policy.validate();
    trust.validate();
    weights.validate();
    if (deadline_ticks < 1) {
        throw ConfigError("deadline_ticks must be >= 1");
    }
}

std::string canonical_dump(const json& j) {
    return j.dump(-1, ' ', false, json::error_handler_t::strict);
}

std::string hash_id_list(const std::vector<NodeId>& ids) {
    return to_hex(sha256(canonical_dump(ids_json(ids))));
}

MicroTokens fraction_of(MicroTokens amount, double fraction) {
    if (amount < 0 || !(fraction >= 0.0 && fraction <= 1.0)) {
        throw std::invalid_argument("fraction_of: amount must be >= 0 and fraction in [0, 1]");
    }
    const auto ppm = static_cast<__int128>(to_micro(fraction));
    const __int128 num = static_cast<__int128>(amount) * ppm;
    __int128 q = num / kMicro;
    const __int128 r = num % kMicro;
    if (2 * r > kMicro || (2 * r == kMicro && (q % 2) != 0)) {
        ++q;
    }
    return static_cast<MicroTokens>(q);
}

json RoundHeader::to_json() const {
    return json{
        {"admission_hash", admission_hash},
        {"aggregator", optional_id(aggregator)},
        {"config_hash", config_hash},
        {"partitions", {{"active", active_hash}, {"probation", probation_hash}, {"suspended", suspended_hash}}},
        {"prior_cid_model", optional_cid(prior_cid_model)},
        {"prior_cid_report", optional_cid(prior_cid_report)},
        {"round_id", round_id},
    };
}

json RoundReport::to_json() const {
    json accepted_json = json::array();
    for (const auto& [id, weight] : accepted) {
        accepted_json.push_back({{"node", id.str()}, {"weight", to_micro(weight)}});
    }
    json nodes_json = json::array();
    for (const auto& n : nodes) {
        json m = nullptr;
        json hint = nullptr;
        if (n.metrics) {
            m = {{"accuracy", to_micro(n.metrics->metrics.accuracy)},
                 {"consistency", to_micro(n.metrics->metrics.consistency)},
                 {"data_quality", to_micro(n.metrics->metrics.data_quality)},
                 {"frequency", to_micro(n.metrics->metrics.frequency)},
                 {"gain", to_micro(n.metrics->gain)},
                 {"improvement", to_micro(n.metrics->improvement)}};
            hint = to_micro(n.metrics->quality_hint);
        }
        nodes_json.push_back({{"accepted", n.accepted},
                              {"admitted", n.admitted},
                              {"metrics", m},
                              {"node", n.id.str()},
                              {"payout", n.payout},
                              {"quality_hint", hint},
                              {"slash", n.slash},
                              {"slash_amount", n.slash_amount},
                              {"status", to_string(n.status)},
                              {"strike", n.strike},
                              {"submitted", n.submitted},
                              {"trust_after", to_micro(n.trust_after)},
                              {"trust_before", to_micro(n.trust_before)}});
    }
    return json{
        {"accepted", accepted_json},
        {"admitted", ids_json(admitted)},
        {"aggregator", optional_id(aggregator)},
        {"budget", budget},
        {"next_aggregator", optional_id(next_aggregator)},
        {"nodes", nodes_json},
        {"round_id", round_id},
        {"submitted", ids_json(submitted)},
        {"withheld", withheld},
    };
}

std::vector<DigestLeaf> leaves_from_report(const json& report) {
    std::vector<DigestLeaf> leaves;
    for (const auto& n : report.at("nodes")) {
        const bool accepted = n.at("accepted").get<bool>();
        const bool slash = n.at("slash").get<bool>();
        if (accepted || slash) {
            leaves.push_back({NodeId(n.at("node").get<std::string>()), n.at("payout").get<MicroTokens>(), slash,
                              n.at("slash_amount").get<MicroTokens>()});
        }
    }
    std::sort(leaves.begin(), leaves.end(),
              [](const DigestLeaf& a, const DigestLeaf& b) { return a.node_id < b.node_id; });
    return leaves;
}

Coordinator::Coordinator(ProtocolConfig config, SyntheticTask task, std::vector<NodeSpec> roster,
                         ContentStore& store, Contract& chain)
    : config_(std::move(config)), task_(std::move(task)), store_(store), chain_(chain) {
    config_.validate();
    if (roster.size() > task_.local.size()) {
        throw ConfigError("roster has more nodes than the task has local datasets");
    }
    for (std::size_t i = 0; i < roster.size(); ++i) {
        auto& spec = roster[i];
        if (!spec.behavior) {
            throw ConfigError("node '" + spec.id.str() + "' has no behavior");
        }
        spec.behavior->validate();
        NodeRecord rec;
        rec.data_index = i;
        rec.trust.node_id = spec.id;
        rec.trust.trust = config_.trust.initial_trust;
        rec.consistency = config_.trust.initial_consistency;
        rec.frequency = config_.trust.initial_frequency;
        rec.spec = std::move(spec);
        const NodeId id = rec.spec.id;
        if (!nodes_.emplace(id, std::move(rec)).second) {
            throw ConfigError("duplicate node id '" + id.str() + "'");
        }
    }
    global_ = ModelVector(task_.true_weights.dim());
    aggregator_ = elect_aggregator();
}

double Coordinator::current_validation_loss() const { return validation_loss(global_, task_.validation); }

std::optional<NodeId> Coordinator::elect_aggregator() const {
    std::vector<AggregatorCandidate> cluster;
    for (const auto& [id, rec] : nodes_) {
        if (!std::holds_alternative<Suspended>(rec.status)) {
            cluster.push_back({id, rec.trust.trust, rec.consistency});
        }
    }
    if (cluster.empty()) {
        return std::nullopt;
    }
    return select_aggregator(cluster);
}

RoundHeader Coordinator::publish_round_header(Round round_id) const {
    RoundHeader h;
    h.round_id = round_id;
    h.config_hash = to_hex(sha256(canonical_dump(protocol_json(config_))));

    std::vector<AdmissionCandidate> candidates;
    std::vector<NodeId> active;
    std::vector<NodeId> probation;
    std::vector<NodeId> suspended;
    for (const auto& [id, rec] : nodes_) {
        candidates.push_back({id, rec.trust.trust, rec.consistency, rec.status,
                              ledger_.recent(id, round_id, config_.policy.strike_window)});
        switch (kind_of(rec.status)) {
            case StatusKind::kActive:
                active.push_back(id);
                break;
            case StatusKind::kProbation:
                probation.push_back(id);
                break;
            case StatusKind::kSuspended:
                suspended.push_back(id);
                break;
        }
    }
    h.admitted = form_admission_set(candidates, round_id, config_.policy);
    h.admission_hash = hash_id_list(h.admitted);
    h.active_hash = hash_id_list(active);
    h.probation_hash = hash_id_list(probation);
    h.suspended_hash = hash_id_list(suspended);
    h.prior_cid_model = prior_model_;
    h.prior_cid_report = prior_report_;
    h.aggregator = aggregator_;
    return h;
}

struct Coordinator::Snapshot {
    std::map<NodeId, NodeRecord> nodes;
    StrikeLedger ledger;
    ModelVector global;
    std::optional<Cid> prior_model;
    std::optional<Cid> prior_report;
    std::optional<NodeId> aggregator;
    Contract chain;
};

RoundOutcome Coordinator::run_round(Round round_id) {
    Snapshot snap{nodes_, ledger_, global_, prior_model_, prior_report_, aggregator_, chain_};
    try {
        return execute(round_id);
    } catch (...) {
        nodes_ = std::move(snap.nodes);
        ledger_ = std::move(snap.ledger);
        global_ = std::move(snap.global);
        prior_model_ = std::move(snap.prior_model);
        prior_report_ = std::move(snap.prior_report);
        aggregator_ = std::move(snap.aggregator);
        chain_ = std::move(snap.chain);
        throw;
    }
}

RoundOutcome Coordinator::execute(Round round_id) {
    const auto& policy = config_.policy;
    RoundOutcome out;

    // (1) header and admission.
    out.header = publish_round_header(round_id);
    const auto& admitted = out.header.admitted;
    std::map<NodeId, StatusKind> status_at_start;
    for (const auto& [id, rec] : nodes_) {
        status_at_start.emplace(id, kind_of(rec.status));
    }
    for (const auto& id : admitted) {
        nodes_.at(id).last_admitted = round_id;
    }

    // (2)-(4) distribute the model, collect what arrives before the deadline,
    // then process in ascending id order (std::map order).
    std::map<NodeId, LocalUpdate> submissions;
    for (const auto& id : admitted) {
        const auto& rec = nodes_.at(id);
        auto rng = node_round_rng(config_.seed, id, round_id);
        auto update = local_update(*rec.spec.behavior, global_, task_.local[rec.data_index], round_id, rng);
        if (!update || rec.spec.latency_ticks >= config_.deadline_ticks) {
            continue;
        }
        // Malformed deltas are dropped like late ones.
        if (update->delta.dim() != global_.dim() || !update->delta.all_finite()) {
            continue;
        }
        submissions.emplace(id, std::move(*update));
    }

    // (5) metrics and screening.
    std::map<NodeId, double> gains;
    std::map<NodeId, double> quality;
    std::map<NodeId, double> accuracy;
    std::map<NodeId, bool> accepted;
    OpCounter& ops = out.screening_aggregation_ops;
    if (!submissions.empty()) {
        std::vector<ModelVector> deltas;
        deltas.reserve(submissions.size());
        for (const auto& [id, sub] : submissions) {
            gains[id] = raw_gain(global_, sub.delta, task_.validation);
            deltas.push_back(sub.delta);
            ++out.metric_evaluations;
        }
        const ModelVector reference = reference_direction(deltas, &ops);
        for (const auto& [id, sub] : submissions) {
            quality[id] = data_quality(sub.delta, reference);
        }
        accuracy = normalize_accuracy(gains);
        for (const auto& [id, _] : submissions) {
            if (config_.ablation.screening) {
                ops.comparisons += 2;
                accepted[id] = screen_update(gains[id], quality[id], policy) == ScreenResult::kAccept;
            } else {
                accepted[id] = true;
            }
        }
    }

    // (6) strikes; slash decisions are held for finalization.
    std::map<NodeId, SlashDecision> slashes;
    for (const auto& [id, ok] : accepted) {
        if (!ok) {
            if (auto decision = register_strike_and_check(ledger_, id, round_id, policy)) {
                slashes.emplace(id, *decision);
            }
        }
    }

    // (7) trust update for every node.
    std::map<NodeId, double> trust_before;
    std::map<NodeId, NodeRoundEntry> entries;
    for (auto& [id, rec] : nodes_) {
        trust_before[id] = rec.trust.trust;
        NodeRoundEntry entry;
        entry.id = id;
        entry.status = status_at_start.at(id);
        entry.admitted = std::find(admitted.begin(), admitted.end(), id) != admitted.end();
        entry.trust_before = rec.trust.trust;

        if (auto it = slashes.find(id); it != slashes.end()) {
            rec.trust.cap_until = round_id + static_cast<Round>(it->second.cap_rounds);
            rec.trust.cap_value = it->second.trust_cap;
        }

        const auto sub = submissions.find(id);
        const bool submitted = sub != submissions.end();
        rec.participation.push_back({round_id, entry.admitted, submitted});
        while (rec.participation.size() > static_cast<std::size_t>(config_.trust.freq_window)) {
            rec.participation.pop_front();
        }
        const std::vector<ParticipationRecord> history(rec.participation.begin(), rec.participation.end());
        rec.frequency = update_frequency(history, config_.trust.freq_window, rec.frequency);

        if (submitted) {
            const bool ok = accepted.at(id);
            rec.consistency = update_consistency(rec.consistency, ok, config_.trust.rho);
            const double a = accuracy.at(id);
            const std::vector<double> prior(rec.utility_history.begin(), rec.utility_history.end());
            const double improvement = recovery_signal(prior, a);
            const MetricVector metrics{a, rec.consistency, quality.at(id), rec.frequency};
            rec.trust = update_trust(rec.trust, metrics, improvement, config_.weights, config_.trust, round_id);
            rec.utility_history.push_back(a);
            while (rec.utility_history.size() > 3) {
                rec.utility_history.pop_front();
            }
            entry.submitted = true;
            entry.accepted = ok;
            entry.strike = !ok;
            entry.metrics = NodeMetrics{gains.at(id), metrics, improvement, sub->second.quality_hint};
        } else {
            rec.trust = update_trust(rec.trust, std::nullopt, 0.0, config_.weights, config_.trust, round_id);
        }
        entry.trust_after = rec.trust.trust;
        entries.emplace(id, std::move(entry));
    }

    // (8) aggregation with screening-time trust as weights.
    std::vector<WeightedUpdate> weighted;
    double total_weight = 0.0;
    for (const auto& [id, sub] : submissions) {
        if (accepted.at(id)) {
            const double w = config_.ablation.trust_weights ? trust_before.at(id) : 1.0;
            weighted.push_back({id, sub.delta, w});
            out.report.accepted.emplace_back(id, w);
            total_weight += w;
        }
    }
    ModelVector next_global = total_weight > 0.0 ? aggregate_round(global_, weighted, policy, &ops) : global_;

    // Payouts by utility A * T over the accepted set.
    std::vector<PayoutClaim> claims;
    for (const auto& [id, ok] : accepted) {
        if (ok) {
            claims.push_back({id, accuracy.at(id), trust_before.at(id),
                              status_at_start.at(id) == StatusKind::kProbation});
        }
    }
    const PayoutResult payouts = compute_payouts(claims, policy.round_budget, policy.probation_payout);
    for (const auto& [id, amount] : payouts.payouts) {
        entries.at(id).payout = amount;
    }
    for (const auto& [id, decision] : slashes) {
        const auto account = chain_.account(id);
        if (!account) {
            throw ChainError("node " + id.str() + " is not registered on chain");
        }
        const MicroTokens amount = fraction_of(account->stake, decision.fraction);
        entries.at(id).slash = amount > 0;
        entries.at(id).slash_amount = amount;
    }

    // (9) statuses for the next round and the next aggregator.
    for (auto& [id, rec] : nodes_) {
        rec.status = next_status(rec.status, rec.trust.trust, slashes.contains(id), round_id, rec.last_admitted,
                                 policy);
    }
    const auto next_aggregator = elect_aggregator();

    // (10) artifacts.
    auto& report = out.report;
    report.round_id = round_id;
    report.admitted = admitted;
    for (const auto& [id, _] : submissions) {
        report.submitted.push_back(id);
    }
    for (auto& [_, entry] : entries) {
        report.nodes.push_back(std::move(entry));
    }
    report.aggregator = out.header.aggregator;
    report.next_aggregator = next_aggregator;
    report.budget = policy.round_budget;
    report.withheld = payouts.withheld;

    const json report_json = report.to_json();
    out.header_cid = store_.put(canonical_dump(out.header.to_json()));
    out.model_cid = store_.put(encode_model(next_global));
    out.report_cid = store_.put(canonical_dump(report_json));

    // (11)-(12) finalize and distribute.
    out.leaves = leaves_from_report(report_json);
    out.finalize = FinalizeCall{round_id, out.model_cid, out.report_cid, merkle_root(out.leaves)};
    chain_.finalize_round(out.finalize, out.leaves);
    chain_.distribute_rewards(round_id);

    global_ = std::move(next_global);
    prior_model_ = out.model_cid;
    prior_report_ = out.report_cid;
    aggregator_ = next_aggregator;
    out.validation_loss = current_validation_loss();
    return out;
}

}  // namespace tfl
