#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "grucap/attention.hpp"
#include "grucap/captioner.hpp"
#include "grucap/metrics.hpp"
#include "grucap/optim.hpp"
#include "grucap/text.hpp"

namespace grucap {

struct ManifestEntry {
    std::string id;
    std::string features;  // path, relative paths resolve against the manifest
    std::vector<std::string> captions;
    std::string split;  // train | val | test
};

using DatasetManifest = std::vector<ManifestEntry>;

/// JSON-lines manifest {"id","features","captions","split"}. Validates that
/// ids are unique and referenced feature files exist.
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Resolve an entry's feature path against the manifest location.
std::filesystem::path resolve_features(const std::filesystem::path& manifest_path,
                                       const ManifestEntry& entry);

/// Feature file: magic "FGRD", u32 version=1, u32 H, u32 W, u32 D, then
/// H*W*D little-endian doubles in (row, col, channel) order.
void save_feature_grid(const FeatureGrid& grid, const std::filesystem::path& path);
FeatureGrid load_feature_grid(const std::filesystem::path& path);

struct TrainConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t batch_size = 8;
    std::size_t epochs = 30;
    std::uint64_t seed = 42;
    std::size_t max_caption_len = 20;
    std::size_t enc_dim = 64;    // H_enc
    std::size_t dec_dim = 64;    // H_dec
    std::size_t embed_dim = 32;  // E
    std::size_t attn_dim = 64;   // A
    double grad_clip = 0.0;      // global norm; 0 = off

    void validate() const;
    /// Single JSON object; unknown keys are rejected.
    static TrainConfig from_json_file(const std::filesystem::path& path);
    static TrainConfig from_json_text(const std::string& text);
};

/// Standard Adam update on the captioner blocks; gradients are zeroed
/// afterward. grad_scale is the batch averaging factor.
void adam_step(AdamOptimizer& optimizer, double grad_scale = 1.0);

struct TrainResult {
    std::vector<double> epoch_losses;  // mean per-example loss, one per epoch run
    std::filesystem::path checkpoint_path;
    std::filesystem::path loss_csv_path;
    std::filesystem::path vocab_path;
};

struct TrainOptions {
    std::filesystem::path manifest_path;
    std::filesystem::path out_dir;
    TrainConfig config;
    std::optional<std::filesystem::path> resume_checkpoint;
    std::optional<std::filesystem::path> vocab_file;       // else built from the train split
    std::optional<std::filesystem::path> warm_embedding;   // EMBD file for warm start
};

/// Teacher-forced training over the manifest's train split. Writes
/// checkpoint.bin (parameters + optimizer state + epoch counter) after every
/// epoch and appends `epoch,mean_loss` rows to loss.csv. Deterministic for a
/// fixed (seed, config, data); resume is bit-exact.
TrainResult train(const TrainOptions& options);

// --- synthetic scenes ------------------------------------------------------

inline constexpr std::size_t kSceneFeatureDepth = 16;

struct SceneObject {
    std::size_t shape = 0;  // 0 square, 1 circle, 2 triangle
    std::size_t color = 0;  // 0 red, 1 blue, 2 green
    std::size_t row = 0;
    std::size_t col = 0;
};

struct Scene {
    std::vector<SceneObject> objects;  // 1 or 2
    std::size_t relation = 0;          // pair scenes: 0 above, 1 below, 2 left of, 3 right of
};

const std::vector<std::string>& scene_shape_words();
const std::vector<std::string>& scene_color_words();

/// Deterministic scene set: 1-2 objects per scene on an H x W grid. The
/// feature grid one-hot codes (shape, color, occupancy) per cell in D=16
/// channels. Each scene carries two paraphrased captions; for pair scenes
/// the spatial relation is a fixed function of the object pair, and the
/// placement is sampled to make that relation geometrically true.
struct SynthResult {
    DatasetManifest manifest;
    std::filesystem::path manifest_path;
    std::vector<Scene> scenes;
};

SynthResult synth_dataset(std::size_t count, std::size_t grid_rows, std::size_t grid_cols,
                          std::uint64_t seed, const std::filesystem::path& out_dir,
                          const std::string& split = "train");

/// Feature grid of one scene (exposed for tests and grounding checks).
FeatureGrid scene_features(const Scene& scene, std::size_t grid_rows, std::size_t grid_cols);
/// The two caption paraphrases of a scene.
std::vector<std::string> scene_captions(const Scene& scene);

/// Cells whose one-hot channels carry the given word ("red", "circle", ...);
/// empty for non-object words. Used by the attention-grounding check.
std::vector<std::size_t> word_cells(const FeatureGrid& grid, const std::string& word);

// --- heatmaps ---------------------------------------------------------------

/// Binary graymap (P5). Values map linearly from [0, max] to [0, 255] and
/// each cell becomes a 16x16 pixel block.
void export_heatmap(const HeatGrid& grid, const std::filesystem::path& path);

// --- evaluation --------------------------------------------------------------

/// JSON-lines evaluation pairs {"id","candidate","references"}; candidate and
/// references are raw strings, normalized on load.
std::vector<EvalInstance> load_eval_instances(const std::filesystem::path& path);

/// Generate a caption per manifest entry (restricted to `split` when given)
/// and pair it with the entry's captions as references.
std::vector<EvalInstance> evaluate_model(const DatasetManifest& manifest,
                                         const std::filesystem::path& manifest_path,
                                         const CaptionerParams& params, const Vocabulary& vocab,
                                         std::size_t max_len,
                                         const std::string& split = std::string());

std::string score_report_to_json(const ScoreReport& report);

/// Entry point behind the grucap binary. Exit codes: 0 success, 1 usage
/// error, 2 data error, 3 numeric failure.
int run_cli(int argc, char** argv);

}  // namespace grucap
