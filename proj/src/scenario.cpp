#include "tfl/scenario.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace tfl {
namespace {

using nlohmann::json;

/// Reads the fields of one JSON object, tracking which keys were consumed so
/// that leftovers can be reported as unknown.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            throw ConfigError(path_ + ": expected an object");
        }
    }

    const json* child(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    std::string path(const std::string& key) const { return path_ + "." + key; }

    void number(const std::string& key, double& out) {
        if (const json* v = child(key)) {
            if (!v->is_number()) {
                throw ConfigError(path(key) + ": expected a number");
            }
            out = v->get<double>();
        }
    }

    template <typename Int>
    void integer(const std::string& key, Int& out) {
        if (const json* v = child(key)) {
            if (!v->is_number_integer()) {
                throw ConfigError(path(key) + ": expected an integer");
            }
            if constexpr (std::is_unsigned_v<Int>) {
                if (v->is_number_unsigned()) {
                    out = static_cast<Int>(v->get<std::uint64_t>());
                    return;
                }
                if (v->get<std::int64_t>() < 0) {
                    throw ConfigError(path(key) + ": expected a non-negative integer");
                }
            }
            out = static_cast<Int>(v->get<std::int64_t>());
        }
    }

    void boolean(const std::string& key, bool& out) {
        if (const json* v = child(key)) {
            if (!v->is_boolean()) {
                throw ConfigError(path(key) + ": expected a boolean");
            }
            out = v->get<bool>();
        }
    }

    void string(const std::string& key, std::string& out) {
        if (const json* v = child(key)) {
            if (!v->is_string()) {
                throw ConfigError(path(key) + ": expected a string");
            }
            out = v->get<std::string>();
        }
    }

    std::string required_string(const std::string& key) {
        const json* v = child(key);
        if (!v || !v->is_string()) {
            throw ConfigError(path(key) + ": required string");
        }
        return v->get<std::string>();
    }

    void finish() const {
        for (const auto& [key, _] : j_.items()) {
            if (!seen_.contains(key)) {
                throw ConfigError(path(key) + ": unknown field");
            }
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

std::string shortest(double x) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, end);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
}

std::string default_pubkey(const NodeId& id) { return to_hex(sha256("pubkey:" + id.str())); }

Bytes hex_bytes(const std::string& hex, const std::string& path) {
    if (hex.size() % 2 != 0) {
        throw ConfigError(path + ": pubkey must be an even-length hex string");
    }
    Bytes out;
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        unsigned value = 0;
        auto [p, ec] = std::from_chars(hex.data() + i, hex.data() + i + 2, value, 16);
        if (ec != std::errc() || p != hex.data() + i + 2) {
            throw ConfigError(path + ": pubkey must be hex");
        }
        out.push_back(static_cast<std::uint8_t>(value));
    }
    return out;
}

}  // namespace

json behavior_to_json(const NodeBehavior& behavior) {
    return std::visit(
        [](const auto& b) -> json {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, behavior::Honest>) {
                return {{"kind", "honest"}, {"lr", b.lr}};
            } else if constexpr (std::is_same_v<T, behavior::SignFlip>) {
                return {{"kind", "sign_flip"}, {"lr", b.lr}, {"scale", b.scale}};
            } else if constexpr (std::is_same_v<T, behavior::NoiseAttacker>) {
                return {{"kind", "noise"}, {"std", b.std}};
            } else if constexpr (std::is_same_v<T, behavior::FreeRider>) {
                return {{"kind", "free_rider"}};
            } else if constexpr (std::is_same_v<T, behavior::Intermittent>) {
                return {{"kind", "intermittent"}, {"p_submit", b.p_submit}, {"inner", behavior_to_json(*b.inner)}};
            } else {
                return {{"kind", "recovering"},
                        {"switch_round", b.switch_round},
                        {"before", behavior_to_json(*b.before)},
                        {"after", behavior_to_json(*b.after)}};
            }
        },
        behavior.kind);
}

BehaviorPtr behavior_from_json(const json& j, const std::string& path) {
    ObjectReader r(j, path);
    const std::string kind = r.required_string("kind");
    BehaviorPtr out;
    if (kind == "honest") {
        behavior::Honest b;
        r.number("lr", b.lr);
        out = make_behavior(b);
    } else if (kind == "sign_flip") {
        behavior::SignFlip b;
        r.number("lr", b.lr);
        r.number("scale", b.scale);
        out = make_behavior(b);
    } else if (kind == "noise") {
        behavior::NoiseAttacker b;
        r.number("std", b.std);
        out = make_behavior(b);
    } else if (kind == "free_rider") {
        out = make_behavior(behavior::FreeRider{});
    } else if (kind == "intermittent") {
        behavior::Intermittent b;
        r.number("p_submit", b.p_submit);
        const json* inner = r.child("inner");
        if (!inner) {
            throw ConfigError(r.path("inner") + ": required");
        }
        b.inner = behavior_from_json(*inner, r.path("inner"));
        out = make_behavior(b);
    } else if (kind == "recovering") {
        behavior::Recovering b;
        r.integer("switch_round", b.switch_round);
        const json* before = r.child("before");
        const json* after = r.child("after");
        if (!before || !after) {
            throw ConfigError(path + ": recovering needs 'before' and 'after'");
        }
        b.before = behavior_from_json(*before, r.path("before"));
        b.after = behavior_from_json(*after, r.path("after"));
        out = make_behavior(b);
    } else {
        throw ConfigError(r.path("kind") + ": unknown behavior '" + kind + "'");
    }
    r.finish();
    try {
        out->validate();
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return out;
}

void ScenarioConfig::validate() const {
    protocol.validate();
    if (task.dimension < 1 || task.samples_per_node < task.dimension) {
        throw ConfigError("$.task: need dimension >= 1 and samples_per_node >= dimension");
    }
    if (!(task.noise_std >= 0.0)) {
        throw ConfigError("$.task.noise_std must be >= 0");
    }
    std::set<NodeId> seen;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        const std::string path = "$.nodes[" + std::to_string(i) + "]";
        if (n.spec.id.str().empty()) {
            throw ConfigError(path + ".id must be non-empty");
        }
        if (!seen.insert(n.spec.id).second) {
            throw ConfigError(path + ".id duplicates '" + n.spec.id.str() + "'");
        }
        if (n.spec.stake <= 0) {
            throw ConfigError(path + ".stake must be positive");
        }
        if (!n.spec.behavior) {
            throw ConfigError(path + ".behavior is required");
        }
    }
}

ScenarioConfig default_scenario() { return ScenarioConfig{}; }

ScenarioConfig parse_scenario(const json& doc) {
    ScenarioConfig c;
    ObjectReader top(doc, "$");
    std::string profile = kReferenceProfile;
    top.string("profile", profile);
    if (profile != kReferenceProfile) {
        throw ConfigError("$.profile: unknown profile '" + profile + "'");
    }
    top.integer("seed", c.seed);
    top.integer("rounds", c.rounds);
    top.integer("deadline_ticks", c.protocol.deadline_ticks);

    if (const json* t = top.child("task")) {
        ObjectReader r(*t, "$.task");
        r.integer("dimension", c.task.dimension);
        r.integer("samples_per_node", c.task.samples_per_node);
        r.number("noise_std", c.task.noise_std);
        r.finish();
    }
    if (const json* p = top.child("policy")) {
        auto& pc = c.protocol.policy;
        ObjectReader r(*p, "$.policy");
        r.number("tau_admit", pc.tau_admit);
        r.number("tau_prob", pc.tau_prob);
        r.integer("probation_cadence", pc.probation_cadence);
        r.integer("suspension_rounds", pc.suspension_rounds);
        r.number("tau_quality", pc.tau_quality);
        r.number("probation_payout", pc.probation_payout);
        r.integer("strikes_to_slash", pc.strikes_to_slash);
        r.integer("strike_window", pc.strike_window);
        r.number("slash_fraction", pc.slash_fraction);
        r.number("rehab_cap", pc.rehab_cap);
        r.integer("rehab_window", pc.rehab_window);
        r.integer("max_participants", pc.max_participants);
        double budget = from_micro(pc.round_budget);
        r.number("round_budget", budget);
        if (!(budget >= 0.0)) {
            throw ConfigError("$.policy.round_budget: must be >= 0");
        }
        pc.round_budget = to_micro(budget);
        r.number("trim", pc.trim);
        std::string method = to_string(pc.agg_method);
        r.string("agg_method", method);
        try {
            pc.agg_method = agg_method_from_string(method);
        } catch (const ConfigError& e) {
            throw ConfigError(std::string("$.policy.agg_method: ") + e.what());
        }
        r.finish();
    }
    if (const json* t = top.child("trust")) {
        auto& tp = c.protocol.trust;
        ObjectReader r(*t, "$.trust");
        r.number("lambda", tp.lambda);
        r.number("eta", tp.eta);
        r.number("t_max", tp.t_max);
        r.number("sigma", tp.sigma);
        r.number("rho", tp.rho);
        r.integer("freq_window", tp.freq_window);
        r.number("initial_trust", tp.initial_trust);
        r.number("initial_consistency", tp.initial_consistency);
        r.number("initial_frequency", tp.initial_frequency);
        r.finish();
    }
    if (const json* w = top.child("weights")) {
        auto& tw = c.protocol.weights;
        ObjectReader r(*w, "$.weights");
        r.number("alpha", tw.alpha);
        r.number("beta", tw.beta);
        r.number("gamma", tw.gamma);
        r.number("delta", tw.delta);
        r.finish();
    }
    if (const json* a = top.child("ablation")) {
        ObjectReader r(*a, "$.ablation");
        r.boolean("screening", c.protocol.ablation.screening);
        r.boolean("trust_weights", c.protocol.ablation.trust_weights);
        r.finish();
    }
    if (const json* o = top.child("output")) {
        ObjectReader r(*o, "$.output");
        r.string("dir", c.out_dir);
        r.finish();
    }
    if (const json* nodes = top.child("nodes")) {
        if (!nodes->is_array()) {
            throw ConfigError("$.nodes: expected an array");
        }
        for (std::size_t i = 0; i < nodes->size(); ++i) {
            const std::string path = "$.nodes[" + std::to_string(i) + "]";
            ObjectReader r((*nodes)[i], path);
            ScenarioNode n;
            n.spec.id = NodeId(r.required_string("id"));
            double stake = from_micro(n.spec.stake);
            r.number("stake", stake);
            if (!(stake > 0.0)) {
                throw ConfigError(path + ".stake: must be positive");
            }
            n.spec.stake = to_micro(stake);
            r.integer("latency_ticks", n.spec.latency_ticks);
            r.string("pubkey", n.pubkey_hex);
            if (!n.pubkey_hex.empty()) {
                hex_bytes(n.pubkey_hex, path + ".pubkey");
            }
            const json* b = r.child("behavior");
            if (!b) {
                throw ConfigError(path + ".behavior: required");
            }
            n.spec.behavior = behavior_from_json(*b, path + ".behavior");
            r.finish();
            c.nodes.push_back(std::move(n));
        }
    }
    top.finish();
    try {
        c.validate();
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        throw ConfigError(msg.rfind("$", 0) == 0 ? msg : "$: " + msg);
    }
    return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_scenario(doc);
}

json to_json(const ScenarioConfig& c) {
    const auto& p = c.protocol.policy;
    const auto& t = c.protocol.trust;
    const auto& w = c.protocol.weights;
    json nodes = json::array();
    for (const auto& n : c.nodes) {
        json node{{"id", n.spec.id.str()},
                  {"stake", from_micro(n.spec.stake)},
                  {"latency_ticks", n.spec.latency_ticks},
                  {"behavior", behavior_to_json(*n.spec.behavior)}};
        if (!n.pubkey_hex.empty()) {
            node["pubkey"] = n.pubkey_hex;
        }
        nodes.push_back(std::move(node));
    }
    json doc{
        {"profile", kReferenceProfile},
        {"seed", c.seed},
        {"rounds", c.rounds},
        {"deadline_ticks", c.protocol.deadline_ticks},
        {"task",
         {{"dimension", c.task.dimension},
          {"samples_per_node", c.task.samples_per_node},
          {"noise_std", c.task.noise_std}}},
        {"policy",
         {{"tau_admit", p.tau_admit},
          {"tau_prob", p.tau_prob},
          {"probation_cadence", p.probation_cadence},
          {"suspension_rounds", p.suspension_rounds},
          {"tau_quality", p.tau_quality},
          {"probation_payout", p.probation_payout},
          {"strikes_to_slash", p.strikes_to_slash},
          {"strike_window", p.strike_window},
          {"slash_fraction", p.slash_fraction},
          {"rehab_cap", p.rehab_cap},
          {"rehab_window", p.rehab_window},
          {"max_participants", p.max_participants},
          {"round_budget", from_micro(p.round_budget)},
          {"trim", p.trim},
          {"agg_method", to_string(p.agg_method)}}},
        {"trust",
         {{"lambda", t.lambda},
          {"eta", t.eta},
          {"t_max", t.t_max},
          {"sigma", t.sigma},
          {"rho", t.rho},
          {"freq_window", t.freq_window},
          {"initial_trust", t.initial_trust},
          {"initial_consistency", t.initial_consistency},
          {"initial_frequency", t.initial_frequency}}},
        {"weights", {{"alpha", w.alpha}, {"beta", w.beta}, {"gamma", w.gamma}, {"delta", w.delta}}},
        {"ablation", {{"screening", c.protocol.ablation.screening}, {"trust_weights", c.protocol.ablation.trust_weights}}},
        {"nodes", nodes},
    };
    if (!c.out_dir.empty()) {
        doc["output"] = {{"dir", c.out_dir}};
    }
    return doc;
}

RoundSummary RoundSummary::from_outcome(const RoundOutcome& outcome) {
    const auto& r = outcome.report;
    RoundSummary s;
    s.round_id = r.round_id;
    s.validation_loss = outcome.validation_loss;
    s.admitted = r.admitted.size();
    s.submitted = r.submitted.size();
    s.accepted = r.accepted.size();
    s.withheld = r.withheld;
    for (const auto& n : r.nodes) {
        s.strikes += n.strike ? 1 : 0;
        s.slashes += n.slash ? 1 : 0;
        s.payouts += n.payout;
        s.trust.emplace_back(n.id, n.trust_after);
    }
    return s;
}

void emit_metrics(std::ostream& os, const std::vector<NodeId>& nodes, const std::vector<RoundSummary>& rounds) {
    os << "round,validation_loss,admitted,submitted,accepted,strikes,slashes,payouts,withheld";
    for (const auto& id : nodes) {
        os << ",trust_" << id.str();
    }
    os << '\n';
    for (const auto& s : rounds) {
        os << s.round_id << ',' << shortest(s.validation_loss) << ',' << s.admitted << ',' << s.submitted << ','
           << s.accepted << ',' << s.strikes << ',' << s.slashes << ',' << s.payouts << ',' << s.withheld;
        for (const auto& id : nodes) {
            auto it = std::find_if(s.trust.begin(), s.trust.end(), [&](const auto& p) { return p.first == id; });
            os << ',' << (it == s.trust.end() ? std::string() : std::to_string(to_micro(it->second)));
        }
        os << '\n';
    }
    if (!os) {
        throw std::runtime_error("failed to write metrics stream");
    }
}

ScenarioResult simulate(const ScenarioConfig& config, Contract::Observer observer) {
    config.validate();
    ScenarioResult result;
    result.chain = Contract(config.protocol.policy.round_budget);
    result.chain.set_observer(std::move(observer));

    std::vector<NodeSpec> roster;
    for (const auto& n : config.nodes) {
        const std::string hex = n.pubkey_hex.empty() ? default_pubkey(n.spec.id) : n.pubkey_hex;
        result.chain.register_node(n.spec.id, hex_bytes(hex, "pubkey"), n.spec.stake);
        roster.push_back(n.spec);
        result.node_ids.push_back(n.spec.id);
    }
    std::sort(result.node_ids.begin(), result.node_ids.end());

    auto task = generate_task(config.seed, config.task.dimension, std::max<std::size_t>(1, roster.size()),
                              config.task.samples_per_node, config.task.noise_std);
    ProtocolConfig protocol = config.protocol;
    protocol.seed = config.seed;
    Coordinator coordinator(protocol, std::move(task), std::move(roster), result.store, result.chain);
    result.initial_loss = coordinator.current_validation_loss();
    for (Round r = 0; r < config.rounds; ++r) {
        result.rounds.push_back(coordinator.run_round(r));
        result.summaries.push_back(RoundSummary::from_outcome(result.rounds.back()));
    }
    return result;
}

void write_run(const ScenarioResult& result, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ostringstream metrics;
    emit_metrics(metrics, result.node_ids, result.summaries);
    write_file(dir / "metrics.csv", metrics.str());
    write_file(dir / "events.jsonl", result.chain.events_jsonl());
    result.store.dump(dir / "artifacts");
}

VerifyReport verify_events(std::span<const Event> events, const ContentStore& store) {
    VerifyReport report;
    for (const auto& e : events) {
        const auto* fin = std::get_if<event::RoundFinalized>(&e.body);
        if (!fin) {
            continue;
        }
        ++report.rounds_checked;
        const std::string where = "round " + std::to_string(fin->round_id) + ": ";
        try {
            decode_model(store.get(fin->cid_model));
            const Bytes raw = store.get(fin->cid_report);
            const json doc = json::parse(raw.begin(), raw.end());
            if (doc.at("round_id").get<Round>() != fin->round_id) {
                report.mismatches.push_back(where + "report belongs to another round");
                continue;
            }
            const auto leaves = leaves_from_report(doc);
            if (merkle_root(leaves) != fin->digest) {
                report.mismatches.push_back(where + "digest mismatch");
                continue;
            }
            std::vector<Payout> expected;
            for (const auto& leaf : leaves) {
                if (leaf.payout > 0) {
                    expected.push_back({leaf.node_id, leaf.payout});
                }
            }
            if (expected != fin->payouts) {
                report.mismatches.push_back(where + "payouts differ from report");
            }
        } catch (const std::exception& ex) {
            report.mismatches.push_back(where + ex.what());
        }
    }
    return report;
}

VerifyReport verify_run_dir(const std::filesystem::path& dir) {
    std::ifstream in(dir / "events.jsonl");
    if (!in) {
        throw std::runtime_error("cannot open " + (dir / "events.jsonl").string());
    }
    std::vector<Event> events;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) {
            events.push_back(event_from_json(json::parse(line)));
        }
    }
    ContentStore store;
    if (std::filesystem::exists(dir / "artifacts")) {
        for (const auto& entry : std::filesystem::directory_iterator(dir / "artifacts")) {
            std::ifstream f(entry.path(), std::ios::binary);
            const Bytes bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
            const Cid cid = store.put(bytes);
            if (cid.str() != entry.path().filename().string()) {
                VerifyReport bad = verify_events(events, ContentStore{});
                bad.mismatches.insert(bad.mismatches.begin(),
                                      "artifact " + entry.path().filename().string() + " does not match its name");
                return bad;
            }
        }
    }
    return verify_events(events, store);
}

}  // namespace tfl
