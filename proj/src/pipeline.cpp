#include "campaignfx/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "campaignfx/io.hpp"
#include "campaignfx/random.hpp"
#include "campaignfx/timeutil.hpp"

namespace campaignfx {

using nlohmann::ordered_json;

std::vector<Horizon> RunConfig::horizons() const {
    std::vector<Horizon> out;
    if (short_term) out.push_back(Horizon::ShortTerm);
    if (long_term) out.push_back(Horizon::LongTerm);
    return out;
}

void RunConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw Error(ErrorKind::InvalidConfig, what);
    };
    require(bootstrap.alpha > 0.0 && bootstrap.alpha < 1.0, "alpha must be in (0,1)");
    require(bootstrap.bootstraps >= 1, "bootstraps must be positive");
    require(bootstrap.block_len >= 1, "block_len must be positive");
    require(bootstrap.power_min >= 0.0 && bootstrap.power_min <= 1.0, "power_min must be in [0,1]");
    require(rules.k >= 2, "k must be at least 2");
    require(rules.min_duration >= 2, "min_duration must be at least 2");
    require(rules.w_min >= 2 && rules.w_min <= rules.w_max, "need 2 <= w_min <= w_max");
    require(radius_miles > 0.0, "radius_miles must be positive");
    require(match.grid_deg > 0.0, "grid_deg must be positive");
    require(match.n_groups >= 1, "n_groups must be positive");
    require(folds >= 2, "folds must be at least 2");
    require(jobs >= 1, "jobs must be positive");
    require(short_term || long_term, "select at least one horizon");
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) threads.emplace_back(work);
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------
// Loading

namespace {

void add_line_issues(Inputs& in, const std::filesystem::path& path, const std::vector<LineIssue>& issues,
                     bool malformed) {
    for (const auto& e : issues) {
        in.warnings.push_back(path.string() + ":" + std::to_string(e.line_no) + ": " + e.message);
        if (malformed) ++in.malformed;
    }
}

void add_series(Inputs& in, const std::string& id, std::span<const SnapshotReading> readings, bool full) {
    VenueSeries vs = build_venue_series(readings);
    in.daily.emplace(id, vs.daily);
    if (full) in.series.emplace(id, std::move(vs));
}

}  // namespace

Inputs load_inputs(const RunConfig& cfg, bool need_offers, bool need_profiles) {
    Inputs in;
    // Open every file before parsing so a missing input fails fast.
    const auto snapshot_lines = io::read_file_lines(cfg.snapshots);
    std::vector<std::string> offer_lines, venue_lines;
    if (need_offers) offer_lines = io::read_file_lines(cfg.offers);
    if (need_profiles) venue_lines = io::read_file_lines(cfg.venues);

    const bool csv = cfg.snapshots.extension() == ".csv";
    auto snaps = csv ? parse_snapshots_csv(snapshot_lines) : parse_snapshots(snapshot_lines);
    add_line_issues(in, cfg.snapshots, snaps.errors, true);
    add_line_issues(in, cfg.snapshots, snaps.anomalies, false);
    for (const auto& [id, readings] : snaps.venues) {
        try {
            add_series(in, id, readings, true);
        } catch (const Error& e) {
            in.warnings.push_back(cfg.snapshots.string() + ": venue " + id + ": " + e.what());
        }
    }
    if (need_offers) {
        auto offers = parse_offers(offer_lines);
        add_line_issues(in, cfg.offers, offers.errors, true);
        in.offers = std::move(offers.offers);
    }
    if (need_profiles) {
        auto profiles = parse_profiles(venue_lines);
        add_line_issues(in, cfg.venues, profiles.errors, true);
        in.profiles = std::move(profiles.venues);
        std::stable_sort(in.profiles.begin(), in.profiles.end(),
                         [](const VenueProfile& a, const VenueProfile& b) { return a.venue_id < b.venue_id; });
        std::set<std::string> promoted;
        for (const auto& o : in.offers) promoted.insert(o.venue_id);
        for (auto& p : in.profiles) p.has_promotion = promoted.contains(p.venue_id);
    }
    return in;
}

Inputs inputs_from_generator(const SynthGenerator& gen, int jobs, bool full_series) {
    const std::size_t n = gen.size();
    std::vector<VenueProfile> profiles(n);
    std::vector<std::vector<SpecialOffer>> offers(n);
    std::vector<std::optional<VenueSeries>> series(n);
    parallel_for(n, jobs, [&](std::size_t i) {
        SynthVenue v = gen.venue(i);
        profiles[i] = v.profile;
        offers[i] = std::move(v.offers);
        VenueSeries vs = build_venue_series(v.readings);
        if (!full_series) {
            vs.checkins.values.clear();
            vs.users.values.clear();
            vs.tips.values.clear();
            vs.likes.values.clear();
        }
        series[i] = std::move(vs);
    });
    Inputs in;
    in.profiles = std::move(profiles);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& id = in.profiles[i].venue_id;
        in.daily.emplace(id, series[i]->daily);
        if (full_series) in.series.emplace(id, std::move(*series[i]));
        series[i].reset();
        for (auto& o : offers[i]) in.offers.push_back(std::move(o));
    }
    return in;
}

// ---------------------------------------------------------------------------
// Stages

namespace {

std::optional<Category> category_of(const Inputs& in, const std::string& id) {
    const auto it = std::lower_bound(in.profiles.begin(), in.profiles.end(), id,
                                     [](const VenueProfile& p, const std::string& key) { return p.venue_id < key; });
    if (it == in.profiles.end() || it->venue_id != id) return std::nullopt;
    return it->category;
}

bool all_zero(const DailySeries& s) {
    return std::all_of(s.values.begin(), s.values.end(), [](double v) { return v == 0.0; });
}

const std::vector<double>* segment_for(const SegmentedSeries& seg, Horizon h) {
    if (h == Horizon::ShortTerm) return &seg.during;
    return seg.after ? &*seg.after : nullptr;
}

struct Task {
    std::size_t source;
    Horizon horizon;
};

}  // namespace

void stage_segment(const RunConfig& cfg, const Inputs& in, PipelineResult& out) {
    out.n_venues = in.daily.size();
    out.n_offers = in.offers.size();
    out.periods.clear();
    for (auto& [id, periods] : build_all_periods(in.offers))
        for (auto& p : periods) out.periods.push_back(std::move(p));
    auto eligible = eligible_campaigns(out.periods, in.daily, cfg.rules);
    out.skipped = std::move(eligible.skipped);
    out.campaigns.clear();
    for (auto& c : eligible.campaigns) {
        if (all_zero(in.daily.at(c.period.venue_id))) {
            out.skipped.push_back({ErrorKind::DegenerateSample,
                                   c.period.venue_id + "@" + format_iso_date(c.period.start_day),
                                   "zero check-ins over the whole series"});
            continue;
        }
        out.campaigns.push_back(std::move(c));
    }
}

void stage_promotion_effects(const RunConfig& cfg, const Inputs& in, PipelineResult& out) {
    std::vector<Task> tasks;
    for (std::size_t i = 0; i < out.campaigns.size(); ++i)
        for (Horizon h : cfg.horizons())
            if (segment_for(out.campaigns[i].segments, h)) tasks.push_back({i, h});
    std::vector<EffectRecord> records(tasks.size());
    parallel_for(tasks.size(), cfg.jobs, [&](std::size_t t) {
        const auto& c = out.campaigns[tasks[t].source];
        const Horizon h = tasks[t].horizon;
        Rng rng = make_rng(cfg.seed, "promotion", c.period.venue_id, c.period.start_day, static_cast<int>(h));
        EffectRecord& r = records[t];
        r.venue_id = c.period.venue_id;
        r.category = category_of(in, r.venue_id);
        r.start_day = c.period.start_day;
        r.end_day = c.period.end_day;
        r.result = evaluate_effect(c.segments.before, *segment_for(c.segments, h), h, cfg.bootstrap, rng);
    });
    out.promo_effects = std::move(records);
}

void stage_match(const RunConfig& cfg, const Inputs& in, PipelineResult& out) {
    std::set<std::string> promo_ids;
    for (const auto& c : out.campaigns) promo_ids.insert(c.period.venue_id);
    std::set<std::string> offering;
    for (const auto& o : in.offers) offering.insert(o.venue_id);

    std::vector<VenueProfile> promo, pool;
    for (const auto& p : in.profiles) {
        if (promo_ids.contains(p.venue_id)) {
            promo.push_back(p);
        } else if (!offering.contains(p.venue_id) && in.daily.contains(p.venue_id)) {
            pool.push_back(p);
        }
    }
    std::set<std::string> profiled;
    for (const auto& p : promo) profiled.insert(p.venue_id);
    for (const auto& id : promo_ids)
        if (!profiled.contains(id))
            out.match_issues.push_back({ErrorKind::MissingSeries, id, "no venue profile; not matched"});
    out.pool_size = pool.size();

    Rng match_rng = make_rng(cfg.seed, "match");
    MatchResult matched = match_reference(promo, pool, cfg.match, match_rng);
    for (auto& issue : matched.issues) out.match_issues.push_back(std::move(issue));

    std::vector<EmpiricalPeriod> empirical;
    for (const auto& c : out.campaigns) {
        const auto& s = in.daily.at(c.period.venue_id);
        empirical.push_back({c.period.start_day - s.origin_day, c.period.duration()});
    }
    out.groups.clear();
    for (const auto& g : matched.groups) {
        ReferenceGroup active{g.group_id, filter_zero_activity(g.members, in.daily)};
        std::set<std::string> kept;
        for (const auto& m : active.members) kept.insert(m.venue_id);
        for (const auto& m : g.members)
            if (!kept.contains(m.venue_id))
                out.match_issues.push_back({ErrorKind::DegenerateSample, m.venue_id, "zero check-ins; removed"});
        if (empirical.empty()) {
            out.groups.push_back(ReferenceGroup{g.group_id, {}});
            continue;
        }
        Rng rng = make_rng(cfg.seed, "pseudo", g.group_id);
        out.groups.push_back(assign_pseudo_periods(active, empirical, in.daily, rng, out.match_issues, cfg.rules));
    }
}

void stage_reference_effects(const RunConfig& cfg, const Inputs& in, PipelineResult& out) {
    struct RefTask {
        std::size_t group;
        std::size_t member;
        Horizon horizon;
        SegmentedSeries seg;
    };
    std::vector<RefTask> tasks;
    for (std::size_t g = 0; g < out.groups.size(); ++g) {
        for (std::size_t m = 0; m < out.groups[g].members.size(); ++m) {
            const auto& member = out.groups[g].members[m];
            if (!member.pseudo) continue;
            SegmentedSeries seg = segment(in.daily.at(member.venue_id), *member.pseudo, cfg.rules);
            for (Horizon h : cfg.horizons())
                if (segment_for(seg, h)) tasks.push_back({g, m, h, seg});
        }
    }
    std::vector<EffectRecord> records(tasks.size());
    parallel_for(tasks.size(), cfg.jobs, [&](std::size_t t) {
        const auto& task = tasks[t];
        const auto& group = out.groups[task.group];
        const auto& member = group.members[task.member];
        Rng rng = make_rng(cfg.seed, "reference", group.group_id, member.venue_id, static_cast<int>(task.horizon));
        EffectRecord& r = records[t];
        r.reference = true;
        r.group_id = group.group_id;
        r.venue_id = member.venue_id;
        r.category = category_of(in, r.venue_id);
        r.start_day = member.pseudo->start_day;
        r.end_day = member.pseudo->end_day;
        r.result = evaluate_effect(task.seg.before, *segment_for(task.seg, task.horizon), task.horizon,
                                   cfg.bootstrap, rng);
    });
    out.reference_effects = std::move(records);
}

void stage_features(const RunConfig& cfg, const Inputs& in, PipelineResult& out) {
    const SpatialIndex index(in.profiles);
    std::map<std::pair<std::string, std::int64_t>, const EligibleCampaign*> by_key;
    for (const auto& c : out.campaigns) by_key[{c.period.venue_id, c.period.start_day}] = &c;

    std::vector<std::optional<FeatureVector>> rows(out.promo_effects.size());
    std::vector<std::optional<Issue>> issues(out.promo_effects.size());
    parallel_for(out.promo_effects.size(), cfg.jobs, [&](std::size_t i) {
        const auto& e = out.promo_effects[i];
        const std::string subject = e.venue_id + "@" + format_iso_date(e.start_day);
        const auto pos = index.find(e.venue_id);
        const auto series = in.series.find(e.venue_id);
        if (!pos || series == in.series.end()) {
            issues[i] = Issue{ErrorKind::MissingSeries, subject, "no profile or counters; no feature row"};
            return;
        }
        const auto& c = *by_key.at({e.venue_id, e.start_day});
        const auto& profile = index.at(*pos);
        try {
            FeatureVector fv;
            fv.venue_id = e.venue_id;
            fv.start_day = e.start_day;
            fv.end_day = e.end_day;
            fv.horizon = e.result.horizon;
            fv.f_v = extract_venue_features(c.segments.before, series->second, profile, e.start_day);
            fv.f_p = extract_promo_features(c.period);
            const auto nbhd = neighborhood(profile, index, cfg.radius_miles);
            fv.f_g = extract_geo_features(profile, nbhd, index, in.series, e.start_day);
            fv.observed_d = e.result.cohens_d;
            fv.effect_label = e.result.label;
            rows[i] = std::move(fv);
        } catch (const Error& err) {
            issues[i] = Issue{err.kind(), subject, err.what()};
        }
    });
    out.features.clear();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i]) out.features.push_back(std::move(*rows[i]));
        if (issues[i]) out.feature_issues.push_back(std::move(*issues[i]));
    }
}

FeatureTable feature_table(std::span<const FeatureVector> rows) {
    FeatureTable t;
    for (const auto& fv : rows) {
        t.ids.push_back(fv.venue_id);
        t.horizons.push_back(fv.horizon);
        t.rows.push_back(fv.values());
        t.observed_d.push_back(fv.observed_d);
        t.labels.push_back(fv.effect_label);
    }
    return t;
}

ModelReport evaluate_model(const FeatureTable& table, Horizon horizon, ModelKind kind, unsigned sets, int folds,
                           std::uint64_t seed, bool out_of_sample) {
    ModelReport rep;
    rep.model = kind;
    rep.feature_sets = sets;
    rep.horizon = horizon;
    rep.evaluation = out_of_sample ? "out_of_sample" : "cv";
    rep.seed = seed;
    const Dataset ds = labeled_dataset(table, horizon);
    ModelConfig mc;
    mc.kind = kind;
    mc.forest.seed = derive_seed(seed, "forest");
    try {
        if (out_of_sample) {
            const Dataset eval = inconclusive_dataset(table, horizon);
            rep.n_rows = eval.size();
            const Model model = train_model(ds, columns_for(sets), mc);
            rep.metrics = out_of_sample_eval(model, eval);
        } else {
            rep.n_rows = ds.size();
            rep.metrics = cross_validate(ds, mc, sets, folds, seed).metrics;
        }
    } catch (const Error& e) {
        rep.error = e.what();
    }
    return rep;
}

void stage_feature_aucs(const RunConfig& cfg, PipelineResult& out) {
    const FeatureTable table = feature_table(out.features);
    const auto horizons = cfg.horizons();
    out.feature_aucs.clear();
    const auto& cols = feature_columns();
    for (std::size_t c = 0; c < cols.size(); ++c) {
        if (!cols[c].ranked) continue;
        FeatureAucRow row;
        row.feature = cols[c].name;
        for (Horizon h : horizons) {
            const Dataset ds = labeled_dataset(table, h);
            std::vector<double> pos, neg;
            for (std::size_t i = 0; i < ds.size(); ++i) (ds.y[i] == 1 ? pos : neg).push_back(ds.x[i][c]);
            if (pos.empty() || neg.empty()) continue;
            row.auc_p[h] = {feature_auc(pos, neg), mann_whitney(pos, neg).p_value};
        }
        out.feature_aucs.push_back(std::move(row));
    }
}

void stage_models(const RunConfig& cfg, PipelineResult& out) {
    const FeatureTable table = feature_table(out.features);
    const auto horizons = cfg.horizons();

    const std::vector<unsigned> set_order = {kPromoSet, kVenueSet, kGeoSet, kPromoSet | kVenueSet,
                                             kPromoSet | kGeoSet, kVenueSet | kGeoSet,
                                             kPromoSet | kVenueSet | kGeoSet};
    struct Job {
        Horizon h;
        ModelKind kind;
        unsigned sets;
        bool oos;
    };
    std::vector<Job> jobs;
    for (Horizon h : horizons)
        for (ModelKind kind : {ModelKind::Logistic, ModelKind::Forest}) {
            for (unsigned s : set_order) jobs.push_back({h, kind, s, false});
            for (unsigned s : set_order) jobs.push_back({h, kind, s, true});
        }
    const std::uint64_t cv_seed = derive_seed(cfg.seed, "cv");
    std::vector<ModelReport> reports(jobs.size());
    parallel_for(jobs.size(), cfg.jobs, [&](std::size_t j) {
        reports[j] = evaluate_model(table, jobs[j].h, jobs[j].kind, jobs[j].sets, cfg.folds, cv_seed, jobs[j].oos);
    });
    out.models = std::move(reports);

    // Probability gap of each logistic feature subset against the full model.
    out.rms_gaps.clear();
    const unsigned all = kPromoSet | kVenueSet | kGeoSet;
    for (Horizon h : horizons) {
        const Dataset ds = labeled_dataset(table, h);
        ModelConfig mc;
        std::vector<double> full;
        try {
            full = cross_validate(ds, mc, all, cfg.folds, cv_seed).scores;
        } catch (const Error&) {
            continue;
        }
        for (unsigned s : set_order) {
            if (s == all) continue;
            const auto scores = cross_validate(ds, mc, s, cfg.folds, cv_seed).scores;
            out.rms_gaps.push_back({h, s, all, rms_probability_gap(scores, full)});
        }
    }
}

PipelineResult run_pipeline(const RunConfig& cfg, const Inputs& in) {
    cfg.validate();
    PipelineResult r;
    stage_segment(cfg, in, r);
    stage_promotion_effects(cfg, in, r);
    stage_match(cfg, in, r);
    stage_reference_effects(cfg, in, r);
    stage_features(cfg, in, r);
    stage_feature_aucs(cfg, r);
    stage_models(cfg, r);
    return r;
}

// ---------------------------------------------------------------------------
// Artifacts

namespace {

std::string fmt(double v) { return io::format_double(v); }

std::string category_name(const std::optional<Category>& c) {
    return c ? std::string(to_string(*c)) : std::string();
}

ordered_json json_number(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

ordered_json json_optional(const std::optional<double>& v) { return v ? json_number(*v) : ordered_json(nullptr); }

ordered_json fraction_json(auto&& compute) {
    try {
        const FractionEstimate f = compute();
        ordered_json j;
        j["fraction"] = json_number(f.fraction);
        j["ci_low"] = json_number(f.ci_low);
        j["ci_high"] = json_number(f.ci_high);
        j["n_counted"] = f.n_counted;
        j["n_groups"] = f.n_groups;
        return j;
    } catch (const Error& e) {
        return ordered_json{{"error", std::string(to_string(e.kind()))}};
    }
}

ordered_json label_counts(std::span<const EffectResult> rs) {
    ordered_json j;
    for (EffectLabel l : {EffectLabel::SignificantIncrease, EffectLabel::SignificantDecrease, EffectLabel::PoweredNull,
                          EffectLabel::Inconclusive})
        j[std::string(to_string(l))] =
            std::count_if(rs.begin(), rs.end(), [&](const EffectResult& r) { return r.label == l; });
    return j;
}

ordered_json ecdf_json(std::span<const EffectResult> rs) {
    std::vector<std::optional<double>> ds;
    for (const auto& r : rs) ds.push_back(r.cohens_d);
    const EcdfResult e = effect_ecdf(ds);
    ordered_json points = ordered_json::array();
    for (const auto& [x, f] : e.points) points.push_back({x, f});
    return ordered_json{{"points", points}, {"excluded", e.excluded}};
}

ordered_json cohort_effects(std::span<const EffectResult> promo, std::span<const std::vector<EffectResult>> groups) {
    std::vector<EffectResult> reference;
    for (const auto& g : groups) reference.insert(reference.end(), g.begin(), g.end());
    ordered_json j;
    j["promotion"] = {
        {"n", promo.size()},
        {"labels", label_counts(promo)},
        {"raw_sign", fraction_json([&] { return increase_fraction(promo, FractionMode::RawSign); })},
        {"significant_only", fraction_json([&] { return increase_fraction(promo, FractionMode::SignificantOnly); })},
    };
    j["reference"] = {
        {"n", reference.size()},
        {"labels", label_counts(reference)},
        {"raw_sign", fraction_json([&] { return increase_fraction(groups, FractionMode::RawSign); })},
        {"significant_only", fraction_json([&] { return increase_fraction(groups, FractionMode::SignificantOnly); })},
    };
    return j;
}

}  // namespace

std::string campaigns_csv(const PipelineResult& r) {
    std::ostringstream os;
    os << "venue_id,start,end,duration,n_offers,n_before,n_during,n_after,long_term\n";
    for (const auto& c : r.campaigns) {
        os << io::csv_escape(c.period.venue_id) << ',' << format_iso_date(c.period.start_day) << ','
           << format_iso_date(c.period.end_day) << ',' << c.period.duration() << ',' << c.period.offers.size() << ','
           << c.segments.before.size() << ',' << c.segments.during.size() << ','
           << (c.segments.after ? c.segments.after->size() : 0) << ',' << (c.long_term() ? 1 : 0) << '\n';
    }
    return os.str();
}

std::string skipped_csv(const PipelineResult& r) {
    std::ostringstream os;
    os << "subject,kind,detail\n";
    for (const auto& s : r.skipped)
        os << io::csv_escape(s.subject) << ',' << to_string(s.kind) << ',' << io::csv_escape(s.detail) << '\n';
    return os.str();
}

std::string effects_csv(const PipelineResult& r) {
    std::ostringstream os;
    os << "cohort,group_id,venue_id,category,start,end,horizon,n_before,n_other,diff,cohens_d,p_value,power,"
          "ci_low,ci_high,crit_low,crit_high,degenerate,label\n";
    auto row = [&](const EffectRecord& e) {
        const auto& x = e.result;
        os << (e.reference ? "reference" : "promotion") << ',' << (e.reference ? std::to_string(e.group_id) : "")
           << ',' << io::csv_escape(e.venue_id) << ',' << category_name(e.category) << ','
           << format_iso_date(e.start_day) << ',' << format_iso_date(e.end_day) << ',' << to_string(x.horizon) << ','
           << x.n_before << ',' << x.n_other << ',' << fmt(x.diff) << ',' << io::format_optional(x.cohens_d) << ','
           << fmt(x.p_value) << ',' << fmt(x.power) << ',' << fmt(x.ci_low) << ',' << fmt(x.ci_high) << ','
           << fmt(x.crit_low) << ',' << fmt(x.crit_high) << ',' << (x.degenerate ? 1 : 0) << ',' << to_string(x.label)
           << '\n';
    };
    for (const auto& e : r.promo_effects) row(e);
    for (const auto& e : r.reference_effects) row(e);
    return os.str();
}

std::string groups_csv(const PipelineResult& r) {
    std::ostringstream os;
    os << "group_id,venue_id,counterpart,pseudo_start,pseudo_end\n";
    for (const auto& g : r.groups)
        for (const auto& m : g.members)
            os << g.group_id << ',' << io::csv_escape(m.venue_id) << ',' << io::csv_escape(m.counterpart) << ','
               << (m.pseudo ? format_iso_date(m.pseudo->start_day) : "") << ','
               << (m.pseudo ? format_iso_date(m.pseudo->end_day) : "") << '\n';
    return os.str();
}

std::string features_csv(const PipelineResult& r) {
    std::ostringstream os;
    os << feature_csv_header() << '\n';
    for (const auto& fv : r.features) os << feature_csv_row(fv) << '\n';
    return os.str();
}

std::string feature_aucs_csv(const PipelineResult& r) {
    std::ostringstream os;
    os << "feature,auc_short,p_short,auc_long,p_long\n";
    for (const auto& row : r.feature_aucs) {
        os << row.feature;
        for (Horizon h : {Horizon::ShortTerm, Horizon::LongTerm}) {
            const auto it = row.auc_p.find(h);
            if (it == row.auc_p.end()) {
                os << ",NA,NA";
            } else {
                os << ',' << fmt(it->second.first) << ',' << fmt(it->second.second);
            }
        }
        os << '\n';
    }
    return os.str();
}

namespace {

ordered_json model_json(const ModelReport& m) {
    ordered_json j;
    j["model"] = std::string(to_string(m.model));
    j["feature_sets"] = feature_sets_name(m.feature_sets);
    j["horizon"] = std::string(to_string(m.horizon));
    j["evaluation"] = m.evaluation;
    if (m.metrics) {
        j["metrics"] = {{"accuracy", json_number(m.metrics->accuracy)},
                        {"f_measure", json_number(m.metrics->f_measure)},
                        {"auc", json_optional(m.metrics->auc)}};
    } else {
        j["metrics"] = nullptr;
    }
    j["n_rows"] = m.n_rows;
    j["seed"] = m.seed;
    if (!m.error.empty()) j["error"] = m.error;
    return j;
}

}  // namespace

std::string model_report_json(const ModelReport& m) { return model_json(m).dump(2) + "\n"; }

std::string report_json(const RunConfig& cfg, const Inputs& in, const PipelineResult& r) {
    ordered_json report;

    ordered_json config;
    config["alpha"] = cfg.bootstrap.alpha;
    config["bootstraps"] = cfg.bootstrap.bootstraps;
    config["block_len"] = cfg.bootstrap.block_len;
    config["power_min"] = cfg.bootstrap.power_min;
    config["k"] = cfg.rules.k;
    config["w_min"] = cfg.rules.w_min;
    config["w_max"] = cfg.rules.w_max;
    config["min_duration"] = cfg.rules.min_duration;
    config["radius_miles"] = cfg.radius_miles;
    config["grid_deg"] = cfg.match.grid_deg;
    config["n_groups"] = cfg.match.n_groups;
    config["folds"] = cfg.folds;
    config["seed"] = cfg.seed;
    ordered_json hs = ordered_json::array();
    for (Horizon h : cfg.horizons()) hs.push_back(std::string(to_string(h)));
    config["horizons"] = hs;
    config["standardized_features"] = true;
    config["f_measure"] = "F1 of the positive class";
    report["config"] = config;

    ordered_json cohort;
    cohort["venues_with_series"] = r.n_venues;
    cohort["venue_profiles"] = in.profiles.size();
    cohort["malformed_lines"] = in.malformed;
    cohort["offers"] = r.n_offers;
    cohort["promotion_periods"] = r.periods.size();
    cohort["eligible_campaigns"] = r.campaigns.size();
    cohort["long_term_campaigns"] =
        std::count_if(r.campaigns.begin(), r.campaigns.end(), [](const EligibleCampaign& c) { return c.long_term(); });
    std::map<std::string, std::size_t> skip_reasons;
    for (const auto& s : r.skipped)
        ++skip_reasons[s.kind == ErrorKind::IneligibleCampaign ? s.detail : std::string(to_string(s.kind))];
    cohort["skipped"] = skip_reasons;
    cohort["reference_pool"] = r.pool_size;
    ordered_json groups = ordered_json::array();
    for (const auto& g : r.groups) groups.push_back({{"group_id", g.group_id}, {"members", g.members.size()}});
    cohort["groups"] = groups;
    std::map<std::string, std::size_t> issue_counts;
    for (const auto& i : r.match_issues) ++issue_counts[std::string(to_string(i.kind))];
    cohort["match_issues"] = issue_counts;
    cohort["feature_rows"] = r.features.size();
    cohort["feature_issues"] = r.feature_issues.size();
    const OfferStats stats = offer_stats(r.periods);
    ordered_json kinds = ordered_json::object();
    for (const auto& [kind, ks] : stats.kinds) {
        ordered_json ecdf = ordered_json::array();
        for (const auto& [x, f] : ks.duration_ecdf) ecdf.push_back({x, f});
        kinds[std::string(to_string(kind))] = {{"count", ks.count}, {"share", ks.share}, {"duration_ecdf", ecdf}};
    }
    cohort["offer_kinds"] = kinds;
    report["cohort_summary"] = cohort;

    ordered_json tables;
    for (Horizon h : cfg.horizons()) {
        std::vector<EffectResult> promo;
        std::map<Category, std::vector<EffectResult>> promo_by_cat;
        for (const auto& e : r.promo_effects) {
            if (e.result.horizon != h) continue;
            promo.push_back(e.result);
            if (e.category) promo_by_cat[*e.category].push_back(e.result);
        }
        std::map<int, std::vector<EffectResult>> by_group;
        std::map<Category, std::map<int, std::vector<EffectResult>>> ref_by_cat;
        for (const auto& g : r.groups) by_group[g.group_id];
        for (const auto& e : r.reference_effects) {
            if (e.result.horizon != h) continue;
            by_group[e.group_id].push_back(e.result);
            if (e.category) ref_by_cat[*e.category][e.group_id].push_back(e.result);
        }
        auto flatten = [](const std::map<int, std::vector<EffectResult>>& m) {
            std::vector<std::vector<EffectResult>> out;
            for (const auto& [id, v] : m) out.push_back(v);
            return out;
        };
        const auto groups_vec = flatten(by_group);
        ordered_json t = cohort_effects(promo, groups_vec);
        ordered_json per_group = ordered_json::array();
        for (const auto& [id, v] : by_group) {
            per_group.push_back(
                {{"group_id", id},
                 {"n", v.size()},
                 {"raw_sign", fraction_json([&] { return increase_fraction(v, FractionMode::RawSign); })},
                 {"significant_only",
                  fraction_json([&] { return increase_fraction(v, FractionMode::SignificantOnly); })}});
        }
        t["reference_groups"] = per_group;
        ordered_json by_cat = ordered_json::object();
        for (Category c : kAllCategories) {
            const auto pit = promo_by_cat.find(c);
            const auto rit = ref_by_cat.find(c);
            if (pit == promo_by_cat.end() && rit == ref_by_cat.end()) continue;
            const std::vector<EffectResult> p = pit == promo_by_cat.end() ? std::vector<EffectResult>{} : pit->second;
            const auto g = rit == ref_by_cat.end() ? std::vector<std::vector<EffectResult>>{} : flatten(rit->second);
            ordered_json cj = cohort_effects(p, g);
            cj["ecdf_promotion"] = ecdf_json(p);
            by_cat[std::string(to_string(c))] = cj;
        }
        t["by_category"] = by_cat;
        std::vector<EffectResult> reference;
        for (const auto& g : groups_vec) reference.insert(reference.end(), g.begin(), g.end());
        std::vector<EffectResult> sig_inc;
        for (const auto& e : promo)
            if (e.label == EffectLabel::SignificantIncrease) sig_inc.push_back(e);
        t["ecdf"] = {{"promotion", ecdf_json(promo)},
                     {"reference", ecdf_json(reference)},
                     {"promotion_significant_increase", ecdf_json(sig_inc)}};
        tables[std::string(to_string(h))] = t;
    }
    report["effect_tables"] = tables;

    ordered_json aucs = ordered_json::array();
    for (const auto& row : r.feature_aucs) {
        ordered_json j;
        j["feature"] = row.feature;
        for (Horizon h : {Horizon::ShortTerm, Horizon::LongTerm}) {
            const std::string suffix(to_string(h));
            const auto it = row.auc_p.find(h);
            j["auc_" + suffix] = it == row.auc_p.end() ? ordered_json(nullptr) : json_number(it->second.first);
            j["p_" + suffix] = it == row.auc_p.end() ? ordered_json(nullptr) : json_number(it->second.second);
        }
        aucs.push_back(j);
    }
    report["feature_aucs"] = aucs;

    ordered_json models = ordered_json::array();
    for (const auto& m : r.models) models.push_back(model_json(m));
    report["model_metrics"] = models;

    ordered_json gaps = ordered_json::array();
    for (const auto& g : r.rms_gaps)
        gaps.push_back({{"horizon", std::string(to_string(g.horizon))},
                        {"model", "logistic"},
                        {"a", feature_sets_name(g.sets_a)},
                        {"b", feature_sets_name(g.sets_b)},
                        {"rms", json_number(g.rms)}});
    report["rms_gaps"] = gaps;
    return report.dump(2) + "\n";
}

}  // namespace campaignfx
