#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "grucap/errors.hpp"
#include "grucap/gradcheck.hpp"
#include "grucap/kernels.hpp"
#include "grucap/pipeline.hpp"

namespace grucap {

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::pair<std::size_t, std::size_t> parse_grid(const std::string& text) {
    const auto x = text.find('x');
    if (x == std::string::npos) {
        throw DataError("grid must look like '4x4', got '" + text + "'");
    }
    try {
        const std::size_t rows = std::stoul(text.substr(0, x));
        const std::size_t cols = std::stoul(text.substr(x + 1));
        return {rows, cols};
    } catch (const std::exception&) {
        throw DataError("grid must look like '4x4', got '" + text + "'");
    }
}

TrainConfig config_from_flags(const std::optional<std::string>& config_path,
                              const std::optional<std::uint64_t>& seed) {
    TrainConfig cfg;
    if (config_path) {
        cfg = TrainConfig::from_json_file(*config_path);
    }
    if (seed) {
        cfg.seed = *seed;
    }
    return cfg;
}

int cmd_synth(std::size_t n, std::uint64_t seed, const std::string& out_dir,
              const std::string& grid, const std::string& split) {
    const auto [rows, cols] = parse_grid(grid);
    const SynthResult result = synth_dataset(n, rows, cols, seed, out_dir, split);
    std::cout << "wrote " << result.manifest.size() << " scenes to "
              << result.manifest_path.string() << "\n";
    return kExitOk;
}

int cmd_vocab(const std::string& manifest_path, const std::string& out_path,
              std::size_t min_count) {
    const DatasetManifest manifest = load_manifest(manifest_path);
    std::vector<std::vector<std::string>> corpus;
    for (const ManifestEntry& e : manifest) {
        for (const std::string& c : e.captions) {
            corpus.push_back(normalize_tokenize(c));
        }
    }
    const Vocabulary vocab = Vocabulary::build(corpus, min_count);
    vocab.save(out_path);
    std::cout << "vocabulary of " << vocab.size() << " entries written to " << out_path << "\n";
    return kExitOk;
}

int cmd_embed_train(const std::optional<std::string>& manifest_path,
                    const std::optional<std::string>& corpus_path,
                    const std::optional<std::string>& vocab_path, const std::string& out_path,
                    std::size_t dim, std::size_t window, std::size_t steps, double lr,
                    std::uint64_t seed) {
    std::vector<std::vector<std::string>> sentences;
    if (manifest_path) {
        for (const ManifestEntry& e : load_manifest(*manifest_path)) {
            for (const std::string& c : e.captions) {
                sentences.push_back(normalize_tokenize(c));
            }
        }
    } else if (corpus_path) {
        std::ifstream in(*corpus_path);
        if (!in) {
            throw DataError("cannot read corpus file " + *corpus_path);
        }
        std::string line;
        while (std::getline(in, line)) {
            auto tokens = normalize_tokenize(line);
            if (!tokens.empty()) sentences.push_back(std::move(tokens));
        }
    } else {
        throw DataError("embed-train needs --manifest or --corpus");
    }
    if (sentences.empty()) {
        throw DataError("embed-train: empty corpus");
    }

    Vocabulary vocab =
        vocab_path ? Vocabulary::load(*vocab_path) : Vocabulary::build(sentences, 1);
    if (!vocab_path) {
        vocab.save(out_path + ".vocab.tsv");
    }

    std::vector<std::vector<std::size_t>> indexed;
    indexed.reserve(sentences.size());
    for (const auto& s : sentences) {
        std::vector<std::size_t> row;
        row.reserve(s.size());
        for (const auto& w : s) row.push_back(vocab.index_of(w));
        indexed.push_back(std::move(row));
    }

    const SkipGramTrainResult result =
        train_skipgram(indexed, vocab.size(), dim, window, steps, lr, seed);
    save_embedding(export_table(result.params), out_path);
    std::printf("skip-gram: %zu steps, mean pair loss %.6f -> %.6f, table %zux%zu -> %s\n",
                steps, result.losses.front(), result.losses.back(), vocab.size(), dim,
                out_path.c_str());
    return kExitOk;
}

int cmd_train(const std::string& manifest_path, const std::string& out_dir,
              const std::optional<std::string>& config_path,
              const std::optional<std::uint64_t>& seed,
              const std::optional<std::string>& resume,
              const std::optional<std::string>& vocab_path,
              const std::optional<std::string>& embedding_path) {
    TrainOptions options;
    options.manifest_path = manifest_path;
    options.out_dir = out_dir;
    options.config = config_from_flags(config_path, seed);
    if (resume) options.resume_checkpoint = *resume;
    if (vocab_path) options.vocab_file = *vocab_path;
    if (embedding_path) options.warm_embedding = *embedding_path;

    const TrainResult result = train(options);
    if (!result.epoch_losses.empty()) {
        std::printf("trained %zu epochs, final mean loss %.6f\n", result.epoch_losses.size(),
                    result.epoch_losses.back());
    }
    std::cout << "checkpoint: " << result.checkpoint_path.string() << "\n"
              << "loss curve: " << result.loss_csv_path.string() << "\n";
    return kExitOk;
}

int cmd_caption(const std::optional<std::string>& features_path,
                const std::optional<std::string>& manifest_path,
                const std::optional<std::string>& id, const std::string& checkpoint_path,
                const std::string& vocab_path, std::size_t max_len,
                const std::optional<std::string>& heatmap_dir) {
    fs::path feat;
    std::string scene_id;
    if (features_path) {
        feat = *features_path;
        scene_id = id.value_or(fs::path(feat).stem().string());
    } else if (manifest_path && id) {
        const DatasetManifest manifest = load_manifest(*manifest_path);
        const auto it = std::find_if(manifest.begin(), manifest.end(),
                                     [&](const ManifestEntry& e) { return e.id == *id; });
        if (it == manifest.end()) {
            throw DataError("manifest has no entry '" + *id + "'");
        }
        feat = resolve_features(*manifest_path, *it);
        scene_id = *id;
    } else {
        throw DataError("caption needs --features, or --manifest with --id");
    }

    const Checkpoint ck = load_checkpoint(checkpoint_path);
    const Vocabulary vocab = Vocabulary::load(vocab_path);
    if (ck.params.dims().vocab != vocab.size()) {
        throw DataError("checkpoint vocabulary size disagrees with " + vocab_path);
    }
    const FeatureGrid grid = load_feature_grid(feat);
    const Generated gen = generate(grid, ck.params, max_len);
    std::cout << decode(gen.caption, vocab) << "\n";

    if (heatmap_dir) {
        fs::create_directories(*heatmap_dir);
        for (std::size_t step = 0; step < gen.attention.size(); ++step) {
            const std::size_t token = gen.caption.tokens[step + 1];
            if (token < Vocabulary::kNumReserved) continue;
            const HeatGrid hg = attention_map(gen.attention[step], grid.rows, grid.cols);
            char name[128];
            std::snprintf(name, sizeof(name), "%s_%02zu_%s.pgm", scene_id.c_str(), step,
                          vocab.word_at(token).c_str());
            export_heatmap(hg, fs::path(*heatmap_dir) / name);
        }
    }
    return kExitOk;
}

int cmd_evaluate(const std::optional<std::string>& pairs_path,
                 const std::optional<std::string>& manifest_path,
                 const std::optional<std::string>& checkpoint_path,
                 const std::optional<std::string>& vocab_path, const std::string& split,
                 std::size_t max_len, const std::optional<std::string>& out_path) {
    std::vector<EvalInstance> instances;
    if (pairs_path) {
        instances = load_eval_instances(*pairs_path);
    } else if (manifest_path && checkpoint_path && vocab_path) {
        const DatasetManifest manifest = load_manifest(*manifest_path);
        const Checkpoint ck = load_checkpoint(*checkpoint_path);
        const Vocabulary vocab = Vocabulary::load(*vocab_path);
        instances = evaluate_model(manifest, *manifest_path, ck.params, vocab, max_len, split);
    } else {
        throw DataError("evaluate needs --pairs, or --manifest with --checkpoint and --vocab");
    }
    const std::string json_text = score_report_to_json(score_corpus(instances));
    if (out_path) {
        std::ofstream out(*out_path, std::ios::binary);
        if (!out) {
            throw DataError("cannot write score report " + *out_path);
        }
        out << json_text << "\n";
    }
    std::cout << json_text << "\n";
    return kExitOk;
}

int cmd_gradcheck(std::uint64_t seed) {
    // tiny model, tiny scene: every parameter block against central differences
    CaptionerDims dims;
    dims.vocab = 7;
    dims.embed_dim = 3;
    dims.enc_dim = 4;
    dims.dec_dim = 5;
    dims.attn_dim = 4;
    dims.feat_depth = 4;

    Rng rng(seed);
    CaptionerParams params = CaptionerParams::init(dims, rng);
    FeatureGrid grid;
    grid.rows = 2;
    grid.cols = 2;
    grid.depth = dims.feat_depth;
    grid.values.resize(grid.rows * grid.cols * grid.depth);
    for (double& v : grid.values) v = rng.uniform(-1.0, 1.0);
    Caption target;
    target.tokens = {Vocabulary::kStart, 4, 5, 6, Vocabulary::kEnd};

    GradCheck check;
    const auto result = check.run(
        params.named_blocks(),
        [&]() {
            Tape tape;
            return caption_nll(tape, grid, target, params).value();
        },
        [&]() {
            Tape tape;
            Tensor loss = caption_nll(tape, grid, target, params);
            tape.backward(loss);
        });

    std::printf("gradcheck: max relative error %.3e (block %s, element %zu)\n",
                result.max_rel_err, result.worst_block.c_str(), result.worst_index);
    if (result.max_rel_err < 1e-4) {
        std::puts("gradcheck: PASS");
        return kExitOk;
    }
    std::puts("gradcheck: FAIL");
    return kExitNumeric;
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Attentive GRU image captioner on precomputed feature grids"};
    app.require_subcommand(1);
    app.fallthrough();  // app-level flags may follow the subcommand

    int threads = 0;
    app.add_option("--threads", threads,
                   "worker threads for the dense kernels (1 = serial, 0 = library default)");

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic scene dataset");
    std::size_t synth_n = 10;
    std::uint64_t synth_seed = 1;
    std::string synth_out = "data";
    std::string synth_grid = "4x4";
    std::string synth_split = "train";
    synth->add_option("--n", synth_n, "number of scenes")->required();
    synth->add_option("--seed", synth_seed, "random seed");
    synth->add_option("--out-dir", synth_out, "output directory")->required();
    synth->add_option("--grid", synth_grid, "grid extents, e.g. 4x4");
    synth->add_option("--split", synth_split, "split tag for every entry")
        ->check(CLI::IsMember({"train", "val", "test"}));

    // vocab
    auto* vocab_cmd = app.add_subcommand("vocab", "build a vocabulary from manifest captions");
    std::string vocab_manifest, vocab_out = "vocab.tsv";
    std::size_t vocab_min_count = 1;
    vocab_cmd->add_option("--manifest", vocab_manifest, "dataset manifest")->required();
    vocab_cmd->add_option("--out", vocab_out, "output vocabulary file");
    vocab_cmd->add_option("--min-count", vocab_min_count, "minimum word frequency");

    // embed-train
    auto* embed_cmd = app.add_subcommand("embed-train", "train skip-gram word embeddings");
    std::string embed_manifest, embed_corpus, embed_vocab, embed_out = "embedding.bin";
    std::size_t embed_dim = 32, embed_window = 2, embed_steps = 200;
    double embed_lr = 1e-2;
    std::uint64_t embed_seed = 1;
    embed_cmd->add_option("--manifest", embed_manifest, "dataset manifest as corpus");
    embed_cmd->add_option("--corpus", embed_corpus, "plain-text corpus, one sentence per line");
    embed_cmd->add_option("--vocab", embed_vocab, "existing vocabulary file");
    embed_cmd->add_option("--out", embed_out, "output embedding file");
    embed_cmd->add_option("--dim", embed_dim, "embedding dimension");
    embed_cmd->add_option("--window", embed_window, "context window m");
    embed_cmd->add_option("--steps", embed_steps, "full-batch training steps");
    embed_cmd->add_option("--lr", embed_lr, "learning rate");
    embed_cmd->add_option("--seed", embed_seed, "random seed");

    // train
    auto* train_cmd = app.add_subcommand("train", "train the captioner");
    std::string train_manifest, train_out = "run";
    std::string train_config, train_resume, train_vocab, train_embedding;
    std::uint64_t train_seed = 0;
    bool train_seed_set = false;
    train_cmd->add_option("--manifest", train_manifest, "dataset manifest")->required();
    train_cmd->add_option("--out-dir", train_out, "run directory")->required();
    train_cmd->add_option("--config", train_config, "JSON training config");
    train_cmd->add_option("--seed", train_seed, "seed override")
        ->each([&](const std::string&) { train_seed_set = true; });
    train_cmd->add_option("--resume", train_resume, "checkpoint to resume from");
    train_cmd->add_option("--vocab", train_vocab, "existing vocabulary file");
    train_cmd->add_option("--embedding", train_embedding, "EMBD file to warm-start embeddings");

    // caption
    auto* caption_cmd = app.add_subcommand("caption", "greedily caption one feature grid");
    std::string cap_features, cap_manifest, cap_id, cap_checkpoint, cap_vocab, cap_heatmaps;
    std::size_t cap_max_len = 20;
    caption_cmd->add_option("--features", cap_features, "feature grid file");
    caption_cmd->add_option("--manifest", cap_manifest, "manifest to look --id up in");
    caption_cmd->add_option("--id", cap_id, "manifest entry id");
    caption_cmd->add_option("--checkpoint", cap_checkpoint, "model checkpoint")->required();
    caption_cmd->add_option("--vocab", cap_vocab, "vocabulary file")->required();
    caption_cmd->add_option("--max-len", cap_max_len, "maximum words to emit");
    caption_cmd->add_option("--heatmap-dir", cap_heatmaps,
                            "write one attention heatmap per emitted word");

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "score candidates against references");
    std::string eval_pairs, eval_manifest, eval_checkpoint, eval_vocab, eval_split, eval_out;
    std::size_t eval_max_len = 20;
    eval_cmd->add_option("--pairs", eval_pairs, "JSON-lines {id, candidate, references} file");
    eval_cmd->add_option("--manifest", eval_manifest, "manifest to caption and score");
    eval_cmd->add_option("--checkpoint", eval_checkpoint, "model checkpoint");
    eval_cmd->add_option("--vocab", eval_vocab, "vocabulary file");
    eval_cmd->add_option("--split", eval_split, "restrict to one split tag");
    eval_cmd->add_option("--max-len", eval_max_len, "maximum words to emit");
    eval_cmd->add_option("--out", eval_out, "also write the JSON report here");

    // gradcheck
    auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient suite");
    std::uint64_t grad_seed = 7;
    grad_cmd->add_option("--seed", grad_seed, "random seed for the probe model");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    if (threads == 1) {
        kernels::set_parallel(false);
    } else if (threads > 1) {
        kernels::set_parallel(true);
#ifdef _OPENMP
        omp_set_num_threads(threads);
#endif
    }

    auto opt_str = [](const std::string& s) {
        return s.empty() ? std::nullopt : std::optional<std::string>(s);
    };

    try {
        if (synth->parsed()) {
            return cmd_synth(synth_n, synth_seed, synth_out, synth_grid, synth_split);
        }
        if (vocab_cmd->parsed()) {
            return cmd_vocab(vocab_manifest, vocab_out, vocab_min_count);
        }
        if (embed_cmd->parsed()) {
            return cmd_embed_train(opt_str(embed_manifest), opt_str(embed_corpus),
                                   opt_str(embed_vocab), embed_out, embed_dim, embed_window,
                                   embed_steps, embed_lr, embed_seed);
        }
        if (train_cmd->parsed()) {
            return cmd_train(train_manifest, train_out, opt_str(train_config),
                             train_seed_set ? std::optional<std::uint64_t>(train_seed)
                                            : std::nullopt,
                             opt_str(train_resume), opt_str(train_vocab),
                             opt_str(train_embedding));
        }
        if (caption_cmd->parsed()) {
            return cmd_caption(opt_str(cap_features), opt_str(cap_manifest), opt_str(cap_id),
                               cap_checkpoint, cap_vocab, cap_max_len, opt_str(cap_heatmaps));
        }
        if (eval_cmd->parsed()) {
            return cmd_evaluate(opt_str(eval_pairs), opt_str(eval_manifest),
                                opt_str(eval_checkpoint), opt_str(eval_vocab), eval_split,
                                eval_max_len, opt_str(eval_out));
        }
        if (grad_cmd->parsed()) {
            return cmd_gradcheck(grad_seed);
        }
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const DimensionError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const ContractError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}

}  // namespace grucap
