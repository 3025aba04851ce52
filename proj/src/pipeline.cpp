#include "grucap/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "grucap/binio.hpp"
#include "grucap/errors.hpp"

namespace grucap {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// manifest
// ---------------------------------------------------------------------------

DatasetManifest load_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot read manifest " + path.string());
    }
    DatasetManifest manifest;
    std::set<std::string> ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError("manifest " + path.string() + " line " + std::to_string(line_no) +
                            ": " + e.what());
        }
        ManifestEntry entry;
        try {
            entry.id = j.at("id").get<std::string>();
            entry.features = j.at("features").get<std::string>();
            entry.captions = j.at("captions").get<std::vector<std::string>>();
            entry.split = j.at("split").get<std::string>();
        } catch (const json::exception& e) {
            throw DataError("manifest " + path.string() + " line " + std::to_string(line_no) +
                            ": " + e.what());
        }
        if (entry.captions.empty()) {
            throw DataError("manifest entry '" + entry.id + "' has no captions");
        }
        if (!ids.insert(entry.id).second) {
            throw DataError("duplicate manifest id '" + entry.id + "'");
        }
        const fs::path feat = resolve_features(path, entry);
        if (!fs::exists(feat)) {
            throw DataError("manifest entry '" + entry.id + "' references missing feature file " +
                            feat.string());
        }
        manifest.push_back(std::move(entry));
    }
    return manifest;
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write manifest " + path.string());
    }
    for (const ManifestEntry& entry : manifest) {
        json j;
        j["id"] = entry.id;
        j["features"] = entry.features;
        j["captions"] = entry.captions;
        j["split"] = entry.split;
        out << j.dump() << '\n';
    }
}

fs::path resolve_features(const fs::path& manifest_path, const ManifestEntry& entry) {
    fs::path p(entry.features);
    if (p.is_absolute()) return p;
    return manifest_path.parent_path() / p;
}

// ---------------------------------------------------------------------------
// feature files
// ---------------------------------------------------------------------------

namespace {
constexpr std::uint32_t kFeatureVersion = 1;
}

void save_feature_grid(const FeatureGrid& grid, const fs::path& path) {
    grid.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write feature file " + path.string());
    }
    out.write("FGRD", 4);
    binio::put_u32(out, kFeatureVersion);
    binio::put_u32(out, static_cast<std::uint32_t>(grid.rows));
    binio::put_u32(out, static_cast<std::uint32_t>(grid.cols));
    binio::put_u32(out, static_cast<std::uint32_t>(grid.depth));
    for (double v : grid.values) binio::put_f64(out, v);
    if (!out) {
        throw DataError("short write on feature file " + path.string());
    }
}

FeatureGrid load_feature_grid(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot read feature file " + path.string());
    }
    char magic[4];
    if (!in.read(magic, 4) || std::string(magic, 4) != "FGRD") {
        throw DataError("bad magic in feature file " + path.string());
    }
    std::uint32_t version = 0, rows = 0, cols = 0, depth = 0;
    if (!binio::get_u32(in, version) || version != kFeatureVersion) {
        throw DataError("unsupported feature file version in " + path.string());
    }
    if (!binio::get_u32(in, rows) || !binio::get_u32(in, cols) || !binio::get_u32(in, depth)) {
        throw DataError("truncated feature header in " + path.string());
    }
    FeatureGrid grid;
    grid.rows = rows;
    grid.cols = cols;
    grid.depth = depth;
    grid.values.resize(static_cast<std::size_t>(rows) * cols * depth);
    for (double& v : grid.values) {
        if (!binio::get_f64(in, v)) {
            throw DataError("truncated feature payload in " + path.string());
        }
    }
    grid.validate();
    return grid;
}

// ---------------------------------------------------------------------------
// config
// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
    if (learning_rate <= 0.0 || beta1 <= 0.0 || beta1 >= 1.0 || beta2 <= 0.0 || beta2 >= 1.0 ||
        epsilon <= 0.0) {
        throw DataError("config: invalid Adam settings");
    }
    if (batch_size == 0 || epochs == 0 || max_caption_len == 0) {
        throw DataError("config: batch_size, epochs and max_caption_len must be positive");
    }
    if (enc_dim == 0 || dec_dim == 0 || embed_dim == 0 || attn_dim == 0) {
        throw DataError("config: model dimensions must be positive");
    }
    if (grad_clip < 0.0) {
        throw DataError("config: grad_clip must be >= 0");
    }
}

TrainConfig TrainConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("config: ") + e.what());
    }
    if (!j.is_object()) {
        throw DataError("config: expected a single JSON object");
    }
    TrainConfig cfg;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& key = it.key();
        try {
            if (key == "learning_rate") cfg.learning_rate = it.value().get<double>();
            else if (key == "beta1") cfg.beta1 = it.value().get<double>();
            else if (key == "beta2") cfg.beta2 = it.value().get<double>();
            else if (key == "epsilon") cfg.epsilon = it.value().get<double>();
            else if (key == "batch_size") cfg.batch_size = it.value().get<std::size_t>();
            else if (key == "epochs") cfg.epochs = it.value().get<std::size_t>();
            else if (key == "seed") cfg.seed = it.value().get<std::uint64_t>();
            else if (key == "max_caption_len") cfg.max_caption_len = it.value().get<std::size_t>();
            else if (key == "enc_dim") cfg.enc_dim = it.value().get<std::size_t>();
            else if (key == "dec_dim") cfg.dec_dim = it.value().get<std::size_t>();
            else if (key == "embed_dim") cfg.embed_dim = it.value().get<std::size_t>();
            else if (key == "attn_dim") cfg.attn_dim = it.value().get<std::size_t>();
            else if (key == "grad_clip") cfg.grad_clip = it.value().get<double>();
            else throw DataError("config: unknown key '" + key + "'");
        } catch (const json::exception& e) {
            throw DataError("config key '" + key + "': " + e.what());
        }
    }
    cfg.validate();
    return cfg;
}

TrainConfig TrainConfig::from_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot read config file " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

void adam_step(AdamOptimizer& optimizer, double grad_scale) { optimizer.step(grad_scale); }

// ---------------------------------------------------------------------------
// training
// ---------------------------------------------------------------------------

namespace {

struct TrainExample {
    std::size_t entry = 0;    // index into the train subset
    std::size_t caption = 0;  // index into that entry's captions
};

std::string format_loss(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

TrainResult train(const TrainOptions& options) {
    options.config.validate();
    const TrainConfig& cfg = options.config;

    const DatasetManifest manifest = load_manifest(options.manifest_path);
    std::vector<const ManifestEntry*> entries;
    for (const ManifestEntry& e : manifest) {
        if (e.split == "train") entries.push_back(&e);
    }
    if (entries.empty()) {
        throw DataError("manifest " + options.manifest_path.string() + " has no train entries");
    }

    fs::create_directories(options.out_dir);

    // vocabulary
    Vocabulary vocab = [&]() {
        if (options.vocab_file) {
            return Vocabulary::load(*options.vocab_file);
        }
        if (options.resume_checkpoint) {
            const fs::path beside = options.resume_checkpoint->parent_path() / "vocab.tsv";
            if (fs::exists(beside)) {
                return Vocabulary::load(beside);
            }
            throw DataError("resume requires a vocabulary: pass one or keep vocab.tsv next to " +
                            options.resume_checkpoint->string());
        }
        std::vector<std::vector<std::string>> corpus;
        for (const ManifestEntry* e : entries) {
            for (const std::string& c : e->captions) {
                corpus.push_back(normalize_tokenize(c));
            }
        }
        return Vocabulary::build(corpus, 1);
    }();
    const fs::path vocab_path = options.out_dir / "vocab.tsv";
    vocab.save(vocab_path);

    // features (cached up front; also pins D)
    std::vector<FeatureGrid> grids;
    grids.reserve(entries.size());
    for (const ManifestEntry* e : entries) {
        grids.push_back(load_feature_grid(resolve_features(options.manifest_path, *e)));
        if (grids.back().depth != grids.front().depth) {
            throw DataError("feature depth mismatch at entry '" + e->id + "'");
        }
    }

    // encoded captions
    std::vector<std::vector<Caption>> captions(entries.size());
    std::vector<TrainExample> examples;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        for (std::size_t c = 0; c < entries[i]->captions.size(); ++c) {
            captions[i].push_back(
                encode(normalize_tokenize(entries[i]->captions[c]), vocab, cfg.max_caption_len));
            examples.push_back({i, c});
        }
    }

    // model
    CaptionerDims dims;
    dims.vocab = vocab.size();
    dims.embed_dim = cfg.embed_dim;
    dims.enc_dim = cfg.enc_dim;
    dims.dec_dim = cfg.dec_dim;
    dims.attn_dim = cfg.attn_dim;
    dims.feat_depth = grids.front().depth;

    Rng init_rng(cfg.seed);
    CaptionerParams params = CaptionerParams::init(dims, init_rng);
    std::size_t start_epoch = 0;

    AdamConfig adam_cfg;
    adam_cfg.learning_rate = cfg.learning_rate;
    adam_cfg.beta1 = cfg.beta1;
    adam_cfg.beta2 = cfg.beta2;
    adam_cfg.epsilon = cfg.epsilon;
    adam_cfg.grad_clip = cfg.grad_clip;

    if (options.resume_checkpoint) {
        Checkpoint ck = load_checkpoint(*options.resume_checkpoint);
        params = ck.params;
        params.validate();
        if (params.dims().vocab != vocab.size()) {
            throw DataError("resumed checkpoint vocabulary size disagrees with vocab.tsv");
        }
        const auto epoch_block = ck.find("train.epoch");
        if (!epoch_block || epoch_block->size() != 1) {
            throw DataError("resume checkpoint lacks a train.epoch block");
        }
        start_epoch = static_cast<std::size_t>((*epoch_block)[0]);
    }

    if (options.warm_embedding) {
        params.warm_start_embedding(load_embedding(*options.warm_embedding));
    }

    AdamOptimizer optimizer(params.named_blocks(), adam_cfg);
    if (options.resume_checkpoint) {
        Checkpoint ck = load_checkpoint(*options.resume_checkpoint);
        std::vector<std::pair<std::string, std::vector<double>>> adam_blocks;
        for (auto& [name, values] : ck.extra) {
            if (name.rfind("adam.", 0) == 0) adam_blocks.emplace_back(name, values);
        }
        optimizer.restore_state(adam_blocks);
    }

    const fs::path csv_path = options.out_dir / "loss.csv";
    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) {
        throw DataError("cannot write " + csv_path.string());
    }
    csv << "epoch,mean_loss\n";

    const fs::path ckpt_path = options.out_dir / "checkpoint.bin";

    TrainResult result;
    result.checkpoint_path = ckpt_path;
    result.loss_csv_path = csv_path;
    result.vocab_path = vocab_path;

    for (std::size_t epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
        Rng epoch_rng(mix_seed(cfg.seed, epoch));
        std::vector<std::size_t> order(examples.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        epoch_rng.shuffle(order);

        double loss_sum = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t pos = 0; pos < order.size(); pos += cfg.batch_size, ++batch_index) {
            const std::size_t batch_end = std::min(order.size(), pos + cfg.batch_size);
            for (std::size_t k = pos; k < batch_end; ++k) {
                const TrainExample& ex = examples[order[k]];
                Tape tape;
                Tensor loss =
                    caption_nll(tape, grids[ex.entry], captions[ex.entry][ex.caption], params);
                const double value = loss.value();
                if (!std::isfinite(value)) {
                    throw NumericError("non-finite loss in epoch " + std::to_string(epoch) +
                                       ", batch " + std::to_string(batch_index) + " (entry '" +
                                       entries[ex.entry]->id + "')");
                }
                loss_sum += value;
                tape.backward(loss);
            }
            adam_step(optimizer, 1.0 / static_cast<double>(batch_end - pos));
        }

        const double mean_loss = loss_sum / static_cast<double>(examples.size());
        result.epoch_losses.push_back(mean_loss);
        csv << epoch << ',' << format_loss(mean_loss) << '\n';
        csv.flush();

        auto extra = optimizer.state_blocks();
        extra.emplace_back("train.epoch", std::vector<double>{static_cast<double>(epoch + 1)});
        save_checkpoint(ckpt_path, params, extra);
    }

    return result;
}

// ---------------------------------------------------------------------------
// synthetic scenes
// ---------------------------------------------------------------------------

const std::vector<std::string>& scene_shape_words() {
    static const std::vector<std::string> words = {"square", "circle", "triangle"};
    return words;
}

const std::vector<std::string>& scene_color_words() {
    static const std::vector<std::string> words = {"red", "blue", "green"};
    return words;
}

namespace {

// channel layout within the 16-wide feature vector
constexpr std::size_t kShapeChannel = 0;      // 0..2
constexpr std::size_t kColorChannel = 3;      // 3..5
constexpr std::size_t kOccupancyChannel = 6;  // 6
// channels 7..15 stay zero

const char* const kRelationWords[4] = {"above", "below", "left of", "right of"};
constexpr std::size_t kInverseRelation[4] = {1, 0, 3, 2};

// relation of obj1 at (r1,c1) to obj2 at (r2,c2); 4 = none (diagonal tie)
std::size_t relation_of(std::size_t r1, std::size_t c1, std::size_t r2, std::size_t c2) {
    const auto dr = static_cast<std::ptrdiff_t>(r2) - static_cast<std::ptrdiff_t>(r1);
    const auto dc = static_cast<std::ptrdiff_t>(c2) - static_cast<std::ptrdiff_t>(c1);
    const auto adr = dr < 0 ? -dr : dr;
    const auto adc = dc < 0 ? -dc : dc;
    if (adr > adc) return dr > 0 ? 0 : 1;  // obj1 above / below obj2
    if (adc > adr) return dc > 0 ? 2 : 3;  // obj1 left of / right of obj2
    return 4;
}

std::size_t type_index(const SceneObject& o) { return 3 * o.shape + o.color; }

std::string object_phrase(const SceneObject& o) {
    return "a " + scene_color_words()[o.color] + " " + scene_shape_words()[o.shape];
}

}  // namespace

FeatureGrid scene_features(const Scene& scene, std::size_t grid_rows, std::size_t grid_cols) {
    FeatureGrid grid;
    grid.rows = grid_rows;
    grid.cols = grid_cols;
    grid.depth = kSceneFeatureDepth;
    grid.values.assign(grid_rows * grid_cols * kSceneFeatureDepth, 0.0);
    for (const SceneObject& o : scene.objects) {
        const std::size_t cell = o.row * grid_cols + o.col;
        double* v = grid.values.data() + cell * kSceneFeatureDepth;
        v[kShapeChannel + o.shape] = 1.0;
        v[kColorChannel + o.color] = 1.0;
        v[kOccupancyChannel] = 1.0;
    }
    return grid;
}

std::vector<std::string> scene_captions(const Scene& scene) {
    if (scene.objects.size() == 1) {
        const std::string phrase = object_phrase(scene.objects[0]);
        return {phrase, "there is " + phrase};
    }
    const SceneObject& first = scene.objects[0];
    const SceneObject& second = scene.objects[1];
    return {
        object_phrase(first) + " " + kRelationWords[scene.relation] + " " +
            object_phrase(second),
        object_phrase(second) + " " + kRelationWords[kInverseRelation[scene.relation]] + " " +
            object_phrase(first),
    };
}

std::vector<std::size_t> word_cells(const FeatureGrid& grid, const std::string& word) {
    std::ptrdiff_t channel = -1;
    const auto& shapes = scene_shape_words();
    const auto& colors = scene_color_words();
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        if (shapes[i] == word) channel = static_cast<std::ptrdiff_t>(kShapeChannel + i);
    }
    for (std::size_t i = 0; i < colors.size(); ++i) {
        if (colors[i] == word) channel = static_cast<std::ptrdiff_t>(kColorChannel + i);
    }
    std::vector<std::size_t> cells;
    if (channel < 0) return cells;
    for (std::size_t j = 0; j < grid.positions(); ++j) {
        const double* v = grid.values.data() + j * grid.depth;
        if (v[channel] > 0.5 && v[kOccupancyChannel] > 0.5) {
            cells.push_back(j);
        }
    }
    return cells;
}

SynthResult synth_dataset(std::size_t count, std::size_t grid_rows, std::size_t grid_cols,
                          std::uint64_t seed, const fs::path& out_dir, const std::string& split) {
    if (count < 1) {
        throw ContractError("synth_dataset: count must be >= 1");
    }
    if (grid_rows < 2 || grid_cols < 2) {
        throw ContractError("synth_dataset: grid must be at least 2x2");
    }
    fs::create_directories(out_dir);

    Rng rng(seed);
    SynthResult result;
    for (std::size_t i = 0; i < count; ++i) {
        Scene scene;
        const std::size_t n_objects = 1 + rng.index(2);
        SceneObject a;
        a.shape = rng.index(3);
        a.color = rng.index(3);
        if (n_objects == 1) {
            a.row = rng.index(grid_rows);
            a.col = rng.index(grid_cols);
            scene.objects.push_back(a);
        } else {
            SceneObject b;
            b.shape = rng.index(3);
            b.color = rng.index(3);
            if (type_index(b) < type_index(a)) std::swap(a, b);
            // The relation word is a fixed function of the (ordered) object
            // pair, so captions are predictable from cell contents alone;
            // the placement below makes the relation geometrically true.
            scene.relation = (type_index(a) * 9 + type_index(b)) % 4;
            while (true) {
                a.row = rng.index(grid_rows);
                a.col = rng.index(grid_cols);
                b.row = rng.index(grid_rows);
                b.col = rng.index(grid_cols);
                if (a.row == b.row && a.col == b.col) continue;
                if (relation_of(a.row, a.col, b.row, b.col) == scene.relation) break;
            }
            scene.objects.push_back(a);
            scene.objects.push_back(b);
        }

        char name[32];
        std::snprintf(name, sizeof(name), "scene%05zu", i);
        const std::string id(name);
        const std::string feat_name = id + ".fgrd";
        save_feature_grid(scene_features(scene, grid_rows, grid_cols), out_dir / feat_name);

        ManifestEntry entry;
        entry.id = id;
        entry.features = feat_name;
        entry.captions = scene_captions(scene);
        entry.split = split;
        result.manifest.push_back(std::move(entry));
        result.scenes.push_back(std::move(scene));
    }
    result.manifest_path = out_dir / "manifest.jsonl";
    save_manifest(result.manifest, result.manifest_path);
    return result;
}

// ---------------------------------------------------------------------------
// heatmaps
// ---------------------------------------------------------------------------

void export_heatmap(const HeatGrid& grid, const fs::path& path) {
    if (grid.rows == 0 || grid.cols == 0 || grid.values.size() != grid.rows * grid.cols) {
        throw DimensionError("export_heatmap: malformed grid");
    }
    double max_v = 0.0;
    for (double v : grid.values) {
        if (v < 0.0) {
            throw ContractError("export_heatmap: negative attention weight");
        }
        max_v = std::max(max_v, v);
    }
    constexpr std::size_t kScale = 16;
    const std::size_t width = grid.cols * kScale;
    const std::size_t height = grid.rows * kScale;

    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write heatmap " + path.string());
    }
    out << "P5\n" << width << " " << height << "\n255\n";
    std::vector<unsigned char> row_bytes(width);
    for (std::size_t r = 0; r < height; ++r) {
        for (std::size_t c = 0; c < width; ++c) {
            const double v = grid.values[(r / kScale) * grid.cols + (c / kScale)];
            const double mapped = max_v > 0.0 ? v / max_v * 255.0 : 0.0;
            row_bytes[c] = static_cast<unsigned char>(std::lround(mapped));
        }
        out.write(reinterpret_cast<const char*>(row_bytes.data()),
                  static_cast<std::streamsize>(width));
    }
    if (!out) {
        throw DataError("short write on heatmap " + path.string());
    }
}

// ---------------------------------------------------------------------------
// evaluation
// ---------------------------------------------------------------------------

std::vector<EvalInstance> load_eval_instances(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot read evaluation file " + path.string());
    }
    std::vector<EvalInstance> instances;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
            EvalInstance inst;
            inst.candidate = normalize_tokenize(j.at("candidate").get<std::string>());
            for (const auto& r : j.at("references")) {
                inst.references.push_back(normalize_tokenize(r.get<std::string>()));
            }
            if (inst.references.empty()) {
                throw DataError("instance without references");
            }
            instances.push_back(std::move(inst));
        } catch (const json::exception& e) {
            throw DataError("evaluation file " + path.string() + " line " +
                            std::to_string(line_no) + ": " + e.what());
        }
    }
    if (instances.empty()) {
        throw DataError("evaluation file " + path.string() + " holds no instances");
    }
    return instances;
}

std::vector<EvalInstance> evaluate_model(const DatasetManifest& manifest,
                                         const fs::path& manifest_path,
                                         const CaptionerParams& params, const Vocabulary& vocab,
                                         std::size_t max_len, const std::string& split) {
    std::vector<EvalInstance> instances;
    for (const ManifestEntry& entry : manifest) {
        if (!split.empty() && entry.split != split) continue;
        const FeatureGrid grid = load_feature_grid(resolve_features(manifest_path, entry));
        const Generated gen = generate(grid, params, max_len);
        EvalInstance inst;
        inst.candidate = normalize_tokenize(decode(gen.caption, vocab));
        for (const std::string& c : entry.captions) {
            inst.references.push_back(normalize_tokenize(c));
        }
        instances.push_back(std::move(inst));
    }
    if (instances.empty()) {
        throw DataError("no manifest entries matched split '" + split + "'");
    }
    return instances;
}

std::string score_report_to_json(const ScoreReport& report) {
    json j;
    j["bleu1"] = report.bleu1;
    j["bleu2"] = report.bleu2;
    j["bleu3"] = report.bleu3;
    j["bleu4"] = report.bleu4;
    j["rouge_l"] = report.rouge_l;
    j["cider"] = report.cider;
    j["meteor_exact"] = report.meteor_exact;
    return j.dump();
}

}  // namespace grucap
