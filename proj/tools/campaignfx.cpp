// campaignfx: batch front end for the campaign-effect pipeline.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "campaignfx/error.hpp"
#include "campaignfx/io.hpp"
#include "campaignfx/pipeline.hpp"
#include "campaignfx/synth.hpp"

namespace fs = std::filesystem;
using namespace campaignfx;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

struct Artifacts {
    std::vector<std::pair<std::string, std::string>> files;
    void add(std::string name, std::string content) { files.emplace_back(std::move(name), std::move(content)); }
};

// Writes everything or nothing: files already written are removed on failure.
void commit(const fs::path& dir, const Artifacts& a) {
    std::vector<fs::path> written;
    try {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
        for (const auto& [name, content] : a.files) {
            const fs::path p = dir / name;
            io::write_file(p, content);
            written.push_back(p);
        }
    } catch (...) {
        for (const auto& p : written) {
            std::error_code ignored;
            fs::remove(p, ignored);
        }
        throw;
    }
}

void print_warnings(const Inputs& in) {
    for (const auto& w : in.warnings) std::cerr << "warning: " << w << '\n';
}

struct Options {
    RunConfig run;
    std::string horizon = "both";
};

void add_input_flags(CLI::App* cmd, Options& o, bool offers, bool venues) {
    cmd->add_option("--snapshots", o.run.snapshots, "snapshot JSONL (or .csv)")->required();
    if (offers) cmd->add_option("--offers", o.run.offers, "special-offer JSONL")->required();
    if (venues) cmd->add_option("--venues", o.run.venues, "venue profile JSONL")->required();
}

void add_knobs(CLI::App* cmd, Options& o) {
    auto& r = o.run;
    cmd->add_option("--out", r.out_dir, "output directory")->capture_default_str();
    cmd->add_option("--alpha", r.bootstrap.alpha)->capture_default_str();
    cmd->add_option("--bootstraps", r.bootstrap.bootstraps)->capture_default_str();
    cmd->add_option("--block_len", r.bootstrap.block_len)->capture_default_str();
    cmd->add_option("--power_min", r.bootstrap.power_min)->capture_default_str();
    cmd->add_option("--k", r.rules.k, "before-window days")->capture_default_str();
    cmd->add_option("--w_max", r.rules.w_max, "after-window cap")->capture_default_str();
    cmd->add_option("--min_duration", r.rules.min_duration)->capture_default_str();
    cmd->add_option("--radius_miles", r.radius_miles)->capture_default_str();
    cmd->add_option("--grid_deg", r.match.grid_deg)->capture_default_str();
    cmd->add_option("--n_groups", r.match.n_groups)->capture_default_str();
    cmd->add_option("--folds", r.folds)->capture_default_str();
    cmd->add_option("--seed", r.seed)->envname("CAMPAIGNFX_SEED")->capture_default_str();
    cmd->add_option("--jobs", r.jobs, "worker threads; results do not depend on it")->capture_default_str();
    cmd->add_option("--horizon", o.horizon, "short, long or both")
        ->check(CLI::IsMember({"short", "long", "both"}))
        ->capture_default_str();
}

void finish_options(Options& o) {
    o.run.short_term = o.horizon != "long";
    o.run.long_term = o.horizon != "short";
    o.run.validate();
}

int run_synth(const SynthConfig& cfg, const fs::path& out) {
    const Corpus corpus = generate_corpus(cfg);
    auto join = [](const std::vector<std::string>& lines) {
        std::string s;
        for (const auto& l : lines) s += l + '\n';
        return s;
    };
    Artifacts a;
    a.add("snapshots.jsonl", join(corpus.snapshot_lines));
    a.add("offers.jsonl", join(corpus.offer_lines));
    a.add("venues.jsonl", join(corpus.venue_lines));
    std::string truth;
    for (const auto& t : corpus.truth.venues) truth += truth_json(t) + '\n';
    a.add("truth.jsonl", truth);
    commit(out, a);
    return kExitOk;
}

// Plain key=value lines belong to the subcommand being run; "[report]"
// sections and "report.key" prefixes still work as usual.
class SubcommandConfig : public CLI::ConfigTOML {
public:
    std::string subcommand;

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        auto items = CLI::ConfigTOML::from_config(input);
        if (!subcommand.empty())
            for (auto& item : items)
                if (item.parents.empty()) item.parents = {subcommand};
        return items;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Measure and predict the effect of venue promotion campaigns on daily check-ins"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value file; flags take precedence");
    auto config_reader = std::make_shared<SubcommandConfig>();
    app.config_formatter(config_reader);
    app.allow_config_extras(CLI::config_extras_mode::error);

    Options o;

    auto* segment_cmd = app.add_subcommand("segment", "promotion periods and eligible campaigns");
    add_input_flags(segment_cmd, o, true, false);
    add_knobs(segment_cmd, o);

    auto* test_cmd = app.add_subcommand("test", "bootstrap tests for every eligible campaign");
    add_input_flags(test_cmd, o, true, false);
    add_knobs(test_cmd, o);

    auto* match_cmd = app.add_subcommand("match", "matched reference groups with pseudo periods");
    add_input_flags(match_cmd, o, true, true);
    add_knobs(match_cmd, o);

    auto* features_cmd = app.add_subcommand("features", "feature matrix and per-feature AUC table");
    add_input_flags(features_cmd, o, true, true);
    add_knobs(features_cmd, o);

    auto* report_cmd = app.add_subcommand("report", "full pipeline and report.json");
    add_input_flags(report_cmd, o, true, true);
    add_knobs(report_cmd, o);

    auto* train_cmd = app.add_subcommand("train", "cross-validate a classifier on features.csv");
    fs::path features_path;
    std::string model_name = "logistic";
    std::string sets_text = "Fp+Fv+Fg";
    train_cmd->add_option("--features", features_path, "features.csv from the features subcommand")->required();
    train_cmd->add_option("--model", model_name)->check(CLI::IsMember({"logistic", "forest"}))->capture_default_str();
    train_cmd->add_option("--feature_sets", sets_text, "e.g. Fv, Fp+Fg, all")->capture_default_str();
    train_cmd->add_option("--out", o.run.out_dir)->capture_default_str();
    train_cmd->add_option("--folds", o.run.folds)->capture_default_str();
    train_cmd->add_option("--seed", o.run.seed)->envname("CAMPAIGNFX_SEED")->capture_default_str();
    train_cmd->add_option("--horizon", o.horizon, "short or long")
        ->check(CLI::IsMember({"short", "long"}))
        ->default_str("short");

    auto* synth_cmd = app.add_subcommand("synth", "seeded synthetic corpus with planted effects");
    SynthConfig sc;
    fs::path synth_out = ".";
    synth_cmd->add_option("--venues", sc.n_venues, "number of venues")->capture_default_str();
    synth_cmd->add_option("--days", sc.days)->capture_default_str();
    synth_cmd->add_option("--seed", sc.seed)->envname("CAMPAIGNFX_SEED")->capture_default_str();
    synth_cmd->add_option("--rate_log_mean", sc.base_rate_log_mean)->capture_default_str();
    synth_cmd->add_option("--rate_log_sd", sc.base_rate_log_sd)->capture_default_str();
    synth_cmd->add_option("--seasonality", sc.weekly_seasonality_amp)->capture_default_str();
    synth_cmd->add_option("--trend", sc.platform_trend_per_day)->capture_default_str();
    synth_cmd->add_option("--trend_sd", sc.trend_sd_per_day)->capture_default_str();
    synth_cmd->add_option("--promo_fraction", sc.promo_fraction)->capture_default_str();
    synth_cmd->add_option("--effect", sc.effect_multiplier, "planted multiplier delta")->capture_default_str();
    synth_cmd->add_option("--zero_fraction", sc.zero_venue_fraction)->capture_default_str();
    synth_cmd->add_option("--out", synth_out)->capture_default_str();

    try {
        for (int i = 1; i < argc; ++i) {
            if (const auto* sub = app.get_subcommand_no_throw(argv[i])) {
                config_reader->subcommand = sub->get_name();
                break;
            }
        }
        for (auto* sub : {segment_cmd, test_cmd, match_cmd, features_cmd, report_cmd, train_cmd, synth_cmd})
            sub->fallthrough();
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (synth_cmd->parsed()) return run_synth(sc, synth_out);

        if (train_cmd->parsed()) {
            const unsigned sets = parse_feature_sets(sets_text);
            if (sets == 0) throw Error(ErrorKind::InvalidConfig, "unknown feature sets '" + sets_text + "'");
            if (o.run.folds < 2) throw Error(ErrorKind::InvalidConfig, "folds must be at least 2");
            const Horizon h = *parse_horizon(o.horizon == "long" ? "long" : "short");
            const FeatureTable table = parse_feature_csv(io::read_file_lines(features_path));
            const ModelKind kind = *parse_model_kind(model_name);
            const Dataset ds = labeled_dataset(table, h);
            ModelConfig mc;
            mc.kind = kind;
            const std::uint64_t cv_seed = derive_seed(o.run.seed, "cv");
            mc.forest.seed = derive_seed(cv_seed, "forest");
            ModelReport rep;
            rep.model = kind;
            rep.feature_sets = sets;
            rep.horizon = h;
            rep.evaluation = "cv";
            rep.seed = cv_seed;
            rep.n_rows = ds.size();
            rep.metrics = cross_validate(ds, mc, sets, o.run.folds, cv_seed).metrics;
            const ModelReport oos = evaluate_model(table, h, kind, sets, o.run.folds, cv_seed, true);
            auto j = nlohmann::ordered_json::parse(model_report_json(rep));
            j["out_of_sample"] = nlohmann::ordered_json::parse(model_report_json(oos));
            Artifacts a;
            a.add("model_report.json", j.dump(2) + "\n");
            commit(o.run.out_dir, a);
            return kExitOk;
        }

        finish_options(o);
        const bool need_venues = match_cmd->parsed() || features_cmd->parsed() || report_cmd->parsed();
        const Inputs in = load_inputs(o.run, true, need_venues);
        print_warnings(in);
        PipelineResult r;
        Artifacts a;
        stage_segment(o.run, in, r);
        if (segment_cmd->parsed()) {
            a.add("campaigns.csv", campaigns_csv(r));
            a.add("skipped.csv", skipped_csv(r));
        } else if (test_cmd->parsed()) {
            stage_promotion_effects(o.run, in, r);
            a.add("campaigns.csv", campaigns_csv(r));
            a.add("effects.csv", effects_csv(r));
        } else if (match_cmd->parsed()) {
            stage_match(o.run, in, r);
            a.add("groups.csv", groups_csv(r));
        } else if (features_cmd->parsed()) {
            stage_promotion_effects(o.run, in, r);
            stage_features(o.run, in, r);
            stage_feature_aucs(o.run, r);
            a.add("features.csv", features_csv(r));
            a.add("feature_aucs.csv", feature_aucs_csv(r));
        } else {
            stage_promotion_effects(o.run, in, r);
            stage_match(o.run, in, r);
            stage_reference_effects(o.run, in, r);
            stage_features(o.run, in, r);
            stage_feature_aucs(o.run, r);
            stage_models(o.run, r);
            a.add("campaigns.csv", campaigns_csv(r));
            a.add("skipped.csv", skipped_csv(r));
            a.add("effects.csv", effects_csv(r));
            a.add("groups.csv", groups_csv(r));
            a.add("features.csv", features_csv(r));
            a.add("feature_aucs.csv", feature_aucs_csv(r));
            a.add("report.json", report_json(o.run, in, r));
        }
        commit(o.run.out_dir, a);
        return kExitOk;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.kind() == ErrorKind::Io ? kExitIo : kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    }
}
