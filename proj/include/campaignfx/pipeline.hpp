#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "campaignfx/campaign.hpp"
#include "campaignfx/cohort.hpp"
#include "campaignfx/effect.hpp"
#include "campaignfx/features.hpp"
#include "campaignfx/learn.hpp"
#include "campaignfx/series.hpp"
#include "campaignfx/synth.hpp"

namespace campaignfx {

struct RunConfig {
    std::filesystem::path snapshots;
    std::filesystem::path offers;
    std::filesystem::path venues;
    std::filesystem::path out_dir = ".";

    BootstrapConfig bootstrap;
    SegmentRules rules;
    double radius_miles = 0.5;
    MatchConfig match;
    int folds = 10;
    std::uint64_t seed = 1;
    int jobs = 1;  // never affects results
    bool short_term = true;
    bool long_term = true;

    std::vector<Horizon> horizons() const;
    /// Throws InvalidConfig.
    void validate() const;
};

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first exception is rethrown.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

struct Inputs {
    std::map<std::string, VenueSeries> series;  // may be empty for effect-only runs
    std::map<std::string, DailySeries> daily;
    std::vector<VenueProfile> profiles;  // sorted by venue_id
    std::vector<SpecialOffer> offers;
    std::vector<std::string> warnings;   // "file:line: message"
    std::size_t malformed = 0;
};

/// Reads the JSONL inputs named in cfg. Malformed lines are skipped and
/// reported as warnings; unreadable files throw Error(Io).
Inputs load_inputs(const RunConfig& cfg, bool need_offers, bool need_profiles);

/// Builds inputs straight from a generator without a JSON round trip.
/// With full_series = false only daily check-ins are kept.
Inputs inputs_from_generator(const SynthGenerator& gen, int jobs, bool full_series = true);

struct EffectRecord {
    bool reference = false;
    int group_id = -1;
    std::string venue_id;
    std::optional<Category> category;
    std::int64_t start_day = 0;
    std::int64_t end_day = 0;
    EffectResult result;
};

struct FeatureAucRow {
    std::string feature;
    std::map<Horizon, std::pair<double, double>> auc_p;  // missing when a class is empty
};

struct ModelReport {
    ModelKind model = ModelKind::Logistic;
    unsigned feature_sets = 0;
    Horizon horizon = Horizon::ShortTerm;
    std::string evaluation;  // "cv" or "out_of_sample"
    std::optional<Metrics> metrics;
    std::size_t n_rows = 0;
    std::uint64_t seed = 0;
    std::string error;
};

struct RmsGap {
    Horizon horizon = Horizon::ShortTerm;
    unsigned sets_a = 0;
    unsigned sets_b = 0;
    double rms = 0.0;
};

struct PipelineResult {
    std::size_t n_venues = 0;
    std::size_t n_offers = 0;
    std::vector<PromotionPeriod> periods;
    std::vector<EligibleCampaign> campaigns;
    IssueLog skipped;
    std::vector<EffectRecord> promo_effects;
    std::vector<ReferenceGroup> groups;
    std::size_t pool_size = 0;
    IssueLog match_issues;
    std::vector<EffectRecord> reference_effects;
    std::vector<FeatureVector> features;
    IssueLog feature_issues;
    std::vector<FeatureAucRow> feature_aucs;
    std::vector<ModelReport> models;
    std::vector<RmsGap> rms_gaps;
};

void stage_segment(const RunConfig& cfg, const Inputs& in, PipelineResult& out);
void stage_promotion_effects(const RunConfig& cfg, const Inputs& in, PipelineResult& out);
void stage_match(const RunConfig& cfg, const Inputs& in, PipelineResult& out);
void stage_reference_effects(const RunConfig& cfg, const Inputs& in, PipelineResult& out);
void stage_features(const RunConfig& cfg, const Inputs& in, PipelineResult& out);
void stage_feature_aucs(const RunConfig& cfg, PipelineResult& out);
void stage_models(const RunConfig& cfg, PipelineResult& out);

/// Every stage in order.
PipelineResult run_pipeline(const RunConfig& cfg, const Inputs& in);

/// Cross-validated (or out-of-sample) metrics for one model/feature-set/horizon.
ModelReport evaluate_model(const FeatureTable& table, Horizon horizon, ModelKind kind, unsigned sets, int folds,
                           std::uint64_t seed, bool out_of_sample = false);

FeatureTable feature_table(std::span<const FeatureVector> rows);

std::string campaigns_csv(const PipelineResult& r);
std::string skipped_csv(const PipelineResult& r);
std::string effects_csv(const PipelineResult& r);
std::string groups_csv(const PipelineResult& r);
std::string features_csv(const PipelineResult& r);
std::string feature_aucs_csv(const PipelineResult& r);
std::string model_report_json(const ModelReport& m);
std::string report_json(const RunConfig& cfg, const Inputs& in, const PipelineResult& r);

}  // namespace campaignfx
