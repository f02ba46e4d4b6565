// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Tolerances and time budgets are fixed constants below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tfl/aggregation.hpp"
#include "tfl/policy.hpp"
#include "tfl/scenario.hpp"
#include "tfl/trust.hpp"

using namespace tfl;

namespace {

constexpr double kTrustTol = 1e-9;
constexpr double kMeanTol = 1e-12;
constexpr double kScaleTol = 1e-9;
constexpr double kBaselineFactor = 2.0;
constexpr double kComplexitySlack = 1.5;

struct Failures {
    std::vector<std::string> items;

    void check(bool ok, const std::string& what) {
        if (!ok && items.size() < 8) items.push_back(what);
        if (!ok && items.size() == 8) items.push_back("...");
    }
    bool ok() const { return items.empty(); }
};

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

// Every scenario run goes through here so that the audit criteria cover all
// of them.
struct Audit {
    std::string name;
    ScenarioConfig config;
    std::size_t chain_ops = 0;
    std::size_t conservation_breaks = 0;
    VerifyReport verify;
};
std::vector<Audit> audits;

std::shared_ptr<ScenarioResult> run_scenario(const std::string& name, const ScenarioConfig& config) {
    Audit audit{name, config, 0, 0, {}};
    auto result = std::make_shared<ScenarioResult>(simulate(config, [&audit](const Contract& c) {
        ++audit.chain_ops;
        if (!c.state().conserves()) ++audit.conservation_breaks;
    }));
    audit.verify = verify_events(result->chain.events(), result->store);
    audits.push_back(std::move(audit));
    return result;
}

ScenarioConfig base_config(std::uint64_t seed, Round rounds) {
    ScenarioConfig c;
    c.seed = seed;
    c.rounds = rounds;
    c.task = {4, 32, 0.0};
    return c;
}

void add_node(ScenarioConfig& c, const std::string& id, BehaviorPtr b) {
    c.nodes.push_back({NodeSpec{NodeId(id), std::move(b)}, ""});
}

void add_honest(ScenarioConfig& c, int count) {
    for (int i = 0; i < count; ++i) add_node(c, "h" + std::to_string(i), make_behavior(behavior::Honest{0.1}));
}

ScenarioConfig slashing_roster(Round rounds) {
    auto c = base_config(11, rounds);
    add_honest(c, 8);
    add_node(c, "s0", make_behavior(behavior::SignFlip{0.1, 1.0}));
    add_node(c, "s1", make_behavior(behavior::SignFlip{0.1, 1.0}));
    return c;
}

const NodeRoundEntry* entry(const RoundOutcome& o, const NodeId& id) {
    for (const auto& n : o.report.nodes) {
        if (n.id == id) return &n;
    }
    return nullptr;
}

double final_loss(const ScenarioResult& r) { return r.summaries.back().validation_loss; }

// 1 -------------------------------------------------------------------------

Failures policy_table() {
    Failures f;
    const PolicyConfig p;
    f.check(p.tau_admit == 0.40 && p.tau_prob == 0.25 && p.probation_cadence == 2 && p.suspension_rounds == 2 &&
                p.tau_quality == 0.20 && p.probation_payout == 0.5 && p.strikes_to_slash == 2 &&
                p.strike_window == 5 && p.slash_fraction == 0.10 && p.rehab_cap == 0.60 && p.rehab_window == 5,
            "reference profile constants");

    struct ClassifyRow {
        double trust;
        StatusKind want;
    };
    for (const auto& row : {ClassifyRow{0.40, StatusKind::kActive}, ClassifyRow{0.25, StatusKind::kProbation},
                            ClassifyRow{0.249, StatusKind::kSuspended}}) {
        f.check(classify_status(row.trust, p) == row.want, "classify " + fmt(row.trust));
    }
    const auto susp = next_status(Active{}, 0.249, false, 7, std::nullopt, p);
    f.check(susp == NodeStatus{Suspended{9}}, "T=0.249 suspends for H=2 rounds");

    // admission
    std::vector<AdmissionCandidate> all_active{{NodeId("c"), 0.5, 0.5, Active{}, 0},
                                               {NodeId("a"), 0.9, 0.5, Active{}, 0},
                                               {NodeId("b"), 0.7, 0.5, Active{}, 0}};
    f.check(form_admission_set(all_active, 3, p) == std::vector<NodeId>{NodeId("a"), NodeId("b"), NodeId("c")},
            "all active admitted sorted");
    const std::vector<AdmissionCandidate> prob{{NodeId("p"), 0.3, 0.5, Probation{10}, 0}};
    f.check(form_admission_set(prob, 11, p).empty(), "probation admitted at 10 excluded at 11");
    f.check(form_admission_set(prob, 12, p) == std::vector<NodeId>{NodeId("p")}, "probation eligible at 12");
    const std::vector<AdmissionCandidate> tie{{NodeId("x"), 0.6, 0.4, Active{}, 0},
                                              {NodeId("y"), 0.6, 0.9, Active{}, 0}};
    f.check(form_admission_set(tie, 0, p).front() == NodeId("y"), "C tie-break");

    // screening
    f.check(screen_update(0.0, 0.20, p) == ScreenResult::kAccept, "screen (0, 0.20)");
    f.check(screen_update(-1e-6, 0.9, p) == ScreenResult::kReject, "screen (-1e-6, 0.9)");
    f.check(screen_update(0.3, 0.19, p) == ScreenResult::kReject, "screen (0.3, 0.19)");

    // strikes
    {
        StrikeLedger l;
        f.check(!register_strike_and_check(l, NodeId("n"), 0, p), "first strike");
    }
    {
        StrikeLedger l;
        register_strike_and_check(l, NodeId("n"), 4, p);
        const auto d = register_strike_and_check(l, NodeId("n"), 6, p);
        f.check(d && *d == SlashDecision{0.10, 2, 0.60, 5}, "strikes 4 and 6 slash");
    }
    {
        StrikeLedger l;
        register_strike_and_check(l, NodeId("n"), 1, p);
        f.check(!register_strike_and_check(l, NodeId("n"), 7, p), "strikes 1 and 7 outside window");
    }

    // payouts
    const MicroTokens budget = 100 * kMicro;
    {
        const std::vector<PayoutClaim> one{{NodeId("a"), 1.0, 0.6, false}};
        const auto r = compute_payouts(one, budget, 0.5);
        f.check(r.payouts.at(NodeId("a")) == budget && r.withheld == 0, "sole claimant gets B_t");
    }
    {
        const auto r = compute_payouts({}, budget, 0.5);
        f.check(r.payouts.empty() && r.withheld == budget, "no claims withhold B_t");
    }
    {
        const std::vector<PayoutClaim> two{{NodeId("a"), 1.0, 0.6, false}, {NodeId("p"), 1.0, 0.2, true}};
        const auto r = compute_payouts(two, budget, 0.5);
        f.check(r.payouts.at(NodeId("a")) == 87'500'000 && r.payouts.at(NodeId("p")) == 12'500'000 &&
                    r.withheld == 0,
                "87.5 / 12.5 split");
    }

    // aggregator election
    using AC = AggregatorCandidate;
    f.check(select_aggregator(std::vector<AC>{{NodeId("a"), 0.5, 0.9}, {NodeId("b"), 0.8, 0.1}}) == NodeId("b"),
            "unique max T");
    f.check(select_aggregator(std::vector<AC>{{NodeId("a"), 0.5, 0.3}, {NodeId("b"), 0.5, 0.8}}) == NodeId("b"),
            "C tie-break");
    f.check(select_aggregator(std::vector<AC>{{NodeId("b"), 0.5, 0.5}, {NodeId("a"), 0.5, 0.5}}) == NodeId("a"),
            "id tie-break");
    return f;
}

// 2 -------------------------------------------------------------------------

Failures trust_formulas() {
    Failures f;
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<Round> rounds(0, 200);
    for (int i = 0; i < 10'000; ++i) {
        double w[4];
        for (double& x : w) x = unit(rng);
        const double s = w[0] + w[1] + w[2] + w[3];
        TrustWeights weights{w[0] / s, w[1] / s, w[2] / s, 0.0};
        weights.delta = 1.0 - weights.alpha - weights.beta - weights.gamma;
        if (weights.delta < 0.0) weights.delta = 0.0;
        const MetricVector m{unit(rng), unit(rng), unit(rng), unit(rng)};
        const double blend_expect = weights.alpha * m.accuracy + weights.beta * m.consistency +
                                    weights.gamma * m.data_quality + weights.delta * m.frequency;
        f.check(std::abs(blend_score(weights, m) - blend_expect) <= kTrustTol, "blend #" + std::to_string(i));

        TrustState st;
        st.trust = unit(rng);
        st.last_active_round = rounds(rng);
        st.decayed_through = rounds(rng);
        const Round now = std::max(st.last_active_round, st.decayed_through) + rounds(rng);
        const double lambda = unit(rng);
        const double dt = static_cast<double>(now - std::max(st.last_active_round, st.decayed_through));
        const double decay_expect = st.trust * std::exp(-lambda * dt);
        f.check(std::abs(apply_decay(st, now, lambda).trust - decay_expect) <= kTrustTol,
                "decay #" + std::to_string(i));

        const double eta = unit(rng), imp = unit(rng);
        const double t_max = 0.5 + 0.5 * unit(rng);
        TrustState rs;
        rs.trust = t_max * unit(rng);
        const double rec_expect = rs.trust + eta * (t_max - rs.trust) * imp;
        f.check(std::abs(apply_recovery(rs, imp, eta, t_max).trust - rec_expect) <= kTrustTol,
                "recovery #" + std::to_string(i));
    }
    return f;
}

// 3 -------------------------------------------------------------------------

Failures slashing() {
    Failures f;
    const auto cfg = slashing_roster(20);
    const auto& pol = cfg.protocol.policy;
    const auto r = run_scenario("slashing", cfg);
    for (const auto* name : {"s0", "s1"}) {
        const NodeId id(name);
        std::optional<Round> slashed_at;
        for (const auto& o : r->rounds) {
            const auto* e = entry(o, id);
            if (e->slash) {
                slashed_at = o.report.round_id;
                break;
            }
        }
        f.check(slashed_at.has_value(), std::string(name) + " never slashed");
        if (!slashed_at) continue;
        const Round s = *slashed_at;

        std::size_t strikes = 0;
        for (const auto& o : r->rounds) {
            const Round rid = o.report.round_id;
            if (rid <= s && rid + pol.strike_window > s && entry(o, id)->strike) ++strikes;
        }
        f.check(strikes >= static_cast<std::size_t>(pol.strikes_to_slash),
                std::string(name) + " strikes in window: " + std::to_string(strikes));

        const auto* e = entry(r->rounds[s], id);
        f.check(e->slash_amount == 10 * kMicro, std::string(name) + " slash " + std::to_string(e->slash_amount));
        MicroTokens on_chain = 0;
        for (const auto& ev : r->chain.events()) {
            if (const auto* sl = std::get_if<event::Slashed>(&ev.body); sl && sl->node_id == id && sl->round_id == s) {
                on_chain = sl->amount;
            }
        }
        f.check(on_chain == 10 * kMicro, std::string(name) + " on-chain slash " + std::to_string(on_chain));

        for (Round k = 1; k <= static_cast<Round>(pol.suspension_rounds); ++k) {
            if (s + k >= r->rounds.size()) break;
            const auto* ek = entry(r->rounds[s + k], id);
            f.check(ek->status == StatusKind::kSuspended && !ek->admitted,
                    std::string(name) + " not suspended at round " + std::to_string(s + k));
        }
        if (s + pol.suspension_rounds + 1 < r->rounds.size()) {
            f.check(entry(r->rounds[s + pol.suspension_rounds + 1], id)->status != StatusKind::kSuspended,
                    std::string(name) + " suspension longer than H");
        }
        for (Round k = 0; k <= static_cast<Round>(pol.rehab_window); ++k) {
            if (s + k >= r->rounds.size()) break;
            f.check(entry(r->rounds[s + k], id)->trust_after <= pol.rehab_cap,
                    std::string(name) + " trust above cap at round " + std::to_string(s + k));
        }
    }
    return f;
}

// 4 -------------------------------------------------------------------------

Failures robustness() {
    Failures f;
    const auto full = run_scenario("robust-full", slashing_roster(30));

    auto baseline_cfg = base_config(11, 30);
    add_honest(baseline_cfg, 10);
    const auto baseline = run_scenario("robust-baseline", baseline_cfg);

    auto ablated_cfg = slashing_roster(30);
    ablated_cfg.protocol.policy.agg_method = AggMethod::kTrimmedMean;
    ablated_cfg.protocol.policy.trim = 0.0;
    ablated_cfg.protocol.ablation = {false, false};
    const auto ablated = run_scenario("robust-ablated", ablated_cfg);

    const double lf = final_loss(*full), lb = final_loss(*baseline), la = final_loss(*ablated);
    std::printf("  final loss: full %s, baseline %s, ablated %s\n", fmt(lf).c_str(), fmt(lb).c_str(),
                fmt(la).c_str());
    f.check(lf <= kBaselineFactor * lb, "full not within 2x of baseline");
    f.check(lf < la, "full not below ablated");
    return f;
}

// 5 -------------------------------------------------------------------------

Failures free_rider() {
    Failures f;
    auto cfg = base_config(13, 20);
    add_honest(cfg, 8);
    add_node(cfg, "fr", make_behavior(behavior::FreeRider{}));
    const auto r = run_scenario("free-rider", cfg);
    const NodeId id("fr");
    std::size_t submitted = 0;
    std::optional<Round> below;
    for (const auto& o : r->rounds) {
        const auto* e = entry(o, id);
        if (e->submitted) {
            ++submitted;
            f.check(!e->accepted && e->metrics && e->metrics->metrics.data_quality == 0.0,
                    "accepted at round " + std::to_string(o.report.round_id));
        }
        f.check(e->payout == 0, "paid at round " + std::to_string(o.report.round_id));
        if (!below && e->trust_after < cfg.protocol.policy.tau_admit) below = o.report.round_id;
    }
    f.check(submitted > 0, "never submitted");
    f.check(below && *below < 10, "trust not below tau_admit within 10 rounds");
    MicroTokens balance = r->chain.account(id)->balance;
    f.check(balance == 0, "on-chain balance " + std::to_string(balance));
    return f;
}

// 6 -------------------------------------------------------------------------

Failures recovery() {
    Failures f;
    constexpr Round kSwitch = 6;
    auto cfg = base_config(17, kSwitch + 16);
    add_honest(cfg, 8);
    add_node(cfg, "rc",
             make_behavior(behavior::Recovering{kSwitch, make_behavior(behavior::NoiseAttacker{1.0}),
                                                make_behavior(behavior::Honest{0.1})}));
    const auto r = run_scenario("recovery", cfg);
    const NodeId id("rc");
    bool penalized = false;
    std::optional<Round> active_at;
    for (const auto& o : r->rounds) {
        const auto* e = entry(o, id);
        const Round rid = o.report.round_id;
        if (e->status != StatusKind::kActive || e->trust_after < cfg.protocol.policy.tau_admit) penalized = true;
        // Active status for the next round is decided by the post-round trust.
        if (penalized && rid >= kSwitch && !active_at && e->trust_after >= cfg.protocol.policy.tau_admit &&
            rid + 1 < r->rounds.size() && entry(r->rounds[rid + 1], id)->status == StatusKind::kActive) {
            active_at = rid + 1;
        }
    }
    f.check(penalized, "never suspended or probationed");
    f.check(active_at && *active_at <= kSwitch + 15, "did not regain Active within 15 rounds of switching");
    if (active_at) std::printf("  regained Active at round %llu\n", static_cast<unsigned long long>(*active_at));
    return f;
}

// 7 -------------------------------------------------------------------------

Failures auditability() {
    Failures f;
    for (const auto& a : audits) {
        f.check(a.verify.ok(), a.name + ": " + (a.verify.ok() ? "" : a.verify.mismatches.front()));
        f.check(a.verify.rounds_checked == a.config.rounds,
                a.name + ": checked " + std::to_string(a.verify.rounds_checked) + " rounds");
    }

    // on-disk path used by the CLI
    const auto dir = std::filesystem::temp_directory_path() / "tfl_acceptance_run";
    std::filesystem::remove_all(dir);
    write_run(simulate(slashing_roster(8)), dir);
    const auto disk = verify_run_dir(dir);
    f.check(disk.ok() && disk.rounds_checked == 8, "run directory verification");
    std::filesystem::remove_all(dir);

    std::vector<std::size_t> sizes;
    for (std::size_t d : {2u, 200u, 20000u}) {
        ContentStore store;
        ModelVector m(d);
        for (std::size_t i = 0; i < d; ++i) m[i] = 1.0 / static_cast<double>(i + 1);
        FinalizeCall call;
        call.round_id = 3;
        call.cid_model = store.put(encode_model(m));
        call.cid_report = store.put(std::string(d, 'r'));
        const std::vector<DigestLeaf> leaves{{NodeId("a"), 5, false, 0}, {NodeId("b"), 0, true, 7}};
        call.digest = merkle_root(leaves);
        sizes.push_back(call.encode().size());
    }
    f.check(sizes[0] == sizes[1] && sizes[1] == sizes[2], "finalize size varies with dimension");

    // the coordinator's own calls at two real dimensions
    for (std::size_t d : {2u, 200u}) {
        auto cfg = base_config(3, 2);
        cfg.task = {d, d, 0.0};
        add_honest(cfg, 3);
        const auto r = simulate(cfg);
        for (const auto& o : r.rounds) f.check(o.finalize.encode().size() == sizes[0], "coordinator finalize size");
    }
    return f;
}

// 8 -------------------------------------------------------------------------

std::string metrics_text(const ScenarioResult& r) {
    std::ostringstream os;
    emit_metrics(os, r.node_ids, r.summaries);
    return os.str();
}

Failures conservation_determinism() {
    Failures f;
    const auto first_runs = audits;
    for (const auto& a : first_runs) {
        f.check(a.chain_ops > a.config.nodes.size(), a.name + ": observer saw too few operations");
        f.check(a.conservation_breaks == 0, a.name + ": conservation broken " +
                                                std::to_string(a.conservation_breaks) + " times");
        const auto x = simulate(a.config);
        const auto y = simulate(a.config);
        f.check(metrics_text(x) == metrics_text(y), a.name + ": metrics differ");
        f.check(x.chain.events_jsonl() == y.chain.events_jsonl(), a.name + ": events differ");
        bool reports_equal = x.rounds.size() == y.rounds.size();
        for (std::size_t i = 0; reports_equal && i < x.rounds.size(); ++i) {
            reports_equal = x.store.get(x.rounds[i].report_cid) == y.store.get(y.rounds[i].report_cid) &&
                            x.store.get(x.rounds[i].model_cid) == y.store.get(y.rounds[i].model_cid);
        }
        f.check(reports_equal, a.name + ": reports differ");
    }
    return f;
}

// 9 -------------------------------------------------------------------------

std::vector<WeightedUpdate> random_instance(std::mt19937_64& rng, std::size_t n, std::size_t d) {
    std::uniform_real_distribution<double> val(-1.0, 1.0), w(0.05, 1.0);
    std::vector<WeightedUpdate> items;
    for (std::size_t i = 0; i < n; ++i) {
        ModelVector u(d);
        for (std::size_t c = 0; c < d; ++c) u[c] = val(rng);
        items.push_back({NodeId("n" + std::to_string(i)), u, w(rng)});
    }
    return items;
}

Failures aggregation_properties() {
    Failures f;
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<std::size_t> count(1, 7), dims(1, 5);
    std::uniform_real_distribution<double> scale(1e-3, 1e3);
    for (int t = 0; t < 1000; ++t) {
        const std::size_t n = count(rng), d = dims(rng);
        auto items = random_instance(rng, n, d);
        const auto tag = " #" + std::to_string(t);
        const auto med = weighted_coordinate_median(items);

        // bounded influence: output inside the per-coordinate hull
        for (std::size_t c = 0; c < d; ++c) {
            double lo = items[0].update[c], hi = lo;
            for (const auto& it : items) {
                lo = std::min(lo, it.update[c]);
                hi = std::max(hi, it.update[c]);
            }
            f.check(med[c] >= lo && med[c] <= hi, "median outside hull" + tag);
        }
        // a minority item moved arbitrarily far stays bounded by the others
        if (n >= 3) {
            const double total = std::accumulate(items.begin(), items.end(), 0.0,
                                                 [](double s, const auto& it) { return s + it.weight; });
            const auto light = std::min_element(items.begin(), items.end(),
                                                [](const auto& a, const auto& b) { return a.weight < b.weight; });
            if (light->weight < 0.5 * total) {
                auto moved = items;
                auto& m = moved[static_cast<std::size_t>(light - items.begin())];
                for (std::size_t c = 0; c < d; ++c) m.update[c] = (c % 2 ? -1e12 : 1e12);
                const auto out = weighted_coordinate_median(moved);
                for (std::size_t c = 0; c < d; ++c) f.check(std::abs(out[c]) <= 1.0, "unbounded influence" + tag);
            }
        }
        // scale invariance
        auto scaled = items;
        const double k = scale(rng);
        for (auto& it : scaled) it.weight *= k;
        f.check(weighted_coordinate_median(scaled) == med, "median scale" + tag);
        const auto tm = weighted_trimmed_mean(items, 0.2);
        const auto tms = weighted_trimmed_mean(scaled, 0.2);
        for (std::size_t c = 0; c < d; ++c) f.check(std::abs(tm[c] - tms[c]) <= kScaleTol, "trimmed scale" + tag);
        // permutation invariance
        auto shuffled = items;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        f.check(weighted_coordinate_median(shuffled) == med, "median permutation" + tag);
        f.check(weighted_trimmed_mean(shuffled, 0.2) == tm, "trimmed permutation" + tag);
        // majority breakdown
        auto heavy = items;
        double others = 0.0;
        for (std::size_t i = 1; i < n; ++i) {
            others += heavy[i].weight;
            for (std::size_t c = 0; c < d; ++c) heavy[i].update[c] = (i % 2 ? 1e9 : -1e9);
        }
        heavy[0].weight = others + 0.01;
        f.check(weighted_coordinate_median(heavy) == heavy[0].update, "majority breakdown" + tag);
        // trim 0 is the weighted mean
        const auto mean = weighted_trimmed_mean(items, 0.0);
        for (std::size_t c = 0; c < d; ++c) {
            double num = 0.0, den = 0.0;
            for (const auto& it : items) {
                num += it.weight * it.update[c];
                den += it.weight;
            }
            f.check(std::abs(mean[c] - num / den) <= kMeanTol, "trim 0 mean" + tag);
        }
    }
    return f;
}

// 10 ------------------------------------------------------------------------

Failures complexity() {
    Failures f;
    std::vector<double> ratio;
    for (int n : {8, 64, 512}) {
        auto cfg = base_config(23, 1);
        cfg.protocol.policy.max_participants = n;
        add_honest(cfg, n);
        const auto r = run_scenario("scale-" + std::to_string(n), cfg);
        const auto& o = r->rounds.front();
        f.check(o.report.admitted.size() == static_cast<std::size_t>(n), "admitted " + std::to_string(n));
        const double comps = static_cast<double>(o.screening_aggregation_ops.comparisons);
        const double nlogn = n * std::log2(static_cast<double>(n));
        ratio.push_back(comps / nlogn);
        std::printf("  |A|=%d comparisons=%.0f ratio=%.4f\n", n, comps, ratio.back());
    }
    // c is fitted on the smallest size; larger sizes must stay under it
    const double c = ratio.front();
    for (std::size_t i = 1; i < ratio.size(); ++i) {
        f.check(ratio[i] <= kComplexitySlack * c, "ratio " + fmt(ratio[i]) + " exceeds " + fmt(kComplexitySlack * c));
    }
    return f;
}

struct Criterion {
    int number;
    const char* name;
    double budget_seconds;
    std::function<Failures()> run;
};

}  // namespace

int main() {
    // 7 and 8 audit every scenario run before them, so they go last.
    const std::vector<Criterion> criteria{
        {1, "policy table", 1.0, policy_table},
        {2, "trust formulas", 5.0, trust_formulas},
        {3, "slashing scenario", 10.0, slashing},
        {4, "robustness comparison", 30.0, robustness},
        {5, "free-rider exclusion", 10.0, free_rider},
        {6, "recovery path", 10.0, recovery},
        {9, "aggregation properties", 10.0, aggregation_properties},
        {10, "complexity scaling", 60.0, complexity},
        {7, "digest auditability", 60.0, auditability},
        {8, "conservation and determinism", 120.0, conservation_determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Failures f;
        try {
            f = c.run();
        } catch (const std::exception& e) {
            f.check(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        f.check(secs < c.budget_seconds, "runtime " + fmt(secs) + " s over budget " + fmt(c.budget_seconds) + " s");
        std::printf("%s criterion %d (%s) %.3f s\n", f.ok() ? "PASS" : "FAIL", c.number, c.name, secs);
        for (const auto& item : f.items) std::printf("  - %s\n", item.c_str());
        std::fflush(stdout);
        if (!f.ok()) ++failed;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
