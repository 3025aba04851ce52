#include "grucap/captioner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "grucap/binio.hpp"
#include "grucap/errors.hpp"

namespace grucap {

void FeatureGrid::validate() const {
    if (rows == 0 || cols == 0 || depth == 0) {
        throw DimensionError("feature grid extents must be positive");
    }
    if (values.size() != rows * cols * depth) {
        throw DimensionError("feature grid holds " + std::to_string(values.size()) +
                             " values, expected " + std::to_string(rows * cols * depth));
    }
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw NumericError("feature grid contains a non-finite value");
        }
    }
}

std::vector<double> FeatureGrid::annotation(std::size_t j) const {
    if (j >= positions()) {
        throw ContractError("annotation index out of range");
    }
    return {values.begin() + j * depth, values.begin() + (j + 1) * depth};
}

CaptionerParams CaptionerParams::init(const CaptionerDims& d, Rng& rng) {
    auto fan_bound = [](std::size_t fan_in) {
        return 1.0 / std::sqrt(static_cast<double>(fan_in));
    };
    CaptionerParams p;
    p.enc_w = Tensor::uniform({d.enc_dim, d.feat_depth}, -fan_bound(d.feat_depth),
                              fan_bound(d.feat_depth), rng);
    p.enc_b = Tensor::zeros({d.enc_dim}, true);
    p.init_w = Tensor::uniform({d.dec_dim, d.enc_dim}, -fan_bound(d.enc_dim),
                               fan_bound(d.enc_dim), rng);
    p.init_b = Tensor::zeros({d.dec_dim}, true);
    const double eb = 0.5 / static_cast<double>(d.embed_dim);
    p.embedding = Tensor::uniform({d.vocab, d.embed_dim}, -eb, eb, rng);
    p.gru = GruParams::init(d.dec_dim, d.embed_dim + d.enc_dim, rng);
    p.attn = AttentionParams::init(d.attn_dim, d.dec_dim, d.enc_dim, rng);
    p.out_w = Tensor::uniform({d.vocab, d.dec_dim}, -fan_bound(d.dec_dim), fan_bound(d.dec_dim),
                              rng);
    p.out_b = Tensor::zeros({d.vocab}, true);
    return p;
}

CaptionerParams CaptionerParams::zeros(const CaptionerDims& d) {
    CaptionerParams p;
    p.enc_w = Tensor::zeros({d.enc_dim, d.feat_depth}, true);
    p.enc_b = Tensor::zeros({d.enc_dim}, true);
    p.init_w = Tensor::zeros({d.dec_dim, d.enc_dim}, true);
    p.init_b = Tensor::zeros({d.dec_dim}, true);
    p.embedding = Tensor::zeros({d.vocab, d.embed_dim}, true);
    p.gru = GruParams::zeros(d.dec_dim, d.embed_dim + d.enc_dim);
    p.attn = AttentionParams::zeros(d.attn_dim, d.dec_dim, d.enc_dim);
    p.out_w = Tensor::zeros({d.vocab, d.dec_dim}, true);
    p.out_b = Tensor::zeros({d.vocab}, true);
    return p;
}

CaptionerDims CaptionerParams::dims() const {
    CaptionerDims d;
    d.vocab = embedding.extent(0);
    d.embed_dim = embedding.extent(1);
    d.enc_dim = enc_w.extent(0);
    d.dec_dim = init_w.extent(0);
    d.attn_dim = attn.attn_dim();
    d.feat_depth = enc_w.extent(1);
    return d;
}

std::vector<std::pair<std::string, Tensor>> CaptionerParams::named_blocks() const {
    std::vector<std::pair<std::string, Tensor>> blocks = {
        {"enc_proj.w", enc_w},   {"enc_proj.b", enc_b}, {"init_proj.w", init_w},
        {"init_proj.b", init_b}, {"embedding", embedding},
    };
    for (auto& b : gru.named_blocks()) blocks.push_back(b);
    for (auto& b : attn.named_blocks()) blocks.push_back(b);
    blocks.emplace_back("out_proj.w", out_w);
    blocks.emplace_back("out_proj.b", out_b);
    return blocks;
}

void CaptionerParams::validate() const {
    const CaptionerDims d = dims();
    gru.validate();
    if (gru.hidden() != d.dec_dim || gru.input() != d.embed_dim + d.enc_dim) {
        throw DimensionError("captioner: GRU dims disagree with embedding/encoder blocks");
    }
    if (attn.dec_dim() != d.dec_dim || attn.enc_dim() != d.enc_dim) {
        throw DimensionError("captioner: attention dims disagree with decoder/encoder blocks");
    }
    if (enc_b.shape() != std::vector<std::size_t>{d.enc_dim} ||
        init_w.shape() != std::vector<std::size_t>{d.dec_dim, d.enc_dim} ||
        init_b.shape() != std::vector<std::size_t>{d.dec_dim} ||
        out_w.shape() != std::vector<std::size_t>{d.vocab, d.dec_dim} ||
        out_b.shape() != std::vector<std::size_t>{d.vocab}) {
        throw DimensionError("captioner: projection block shapes disagree");
    }
}

void CaptionerParams::warm_start_embedding(const EmbeddingTable& table) {
    if (table.vocab != embedding.extent(0) || table.dim != embedding.extent(1)) {
        throw DimensionError("warm start embedding is " + std::to_string(table.vocab) + "x" +
                             std::to_string(table.dim) + ", model expects " +
                             embedding.shape_string());
    }
    embedding.data() = table.values;
}

Encoded encode(Tape& tape, const FeatureGrid& grid, const CaptionerParams& p) {
    grid.validate();
    if (grid.depth != p.enc_w.extent(1)) {
        throw DimensionError("feature depth " + std::to_string(grid.depth) +
                             " does not match encoder projection " + p.enc_w.shape_string());
    }
    Tensor annotations =
        Tensor::from_values({grid.positions(), grid.depth}, grid.values);  // constant
    Encoded e;
    e.enc = relu(tape, add(tape, matmul_nt(tape, annotations, p.enc_w), p.enc_b));
    e.h0 = tanh_act(tape, add(tape, matvec(tape, p.init_w, mean_rows(tape, e.enc)), p.init_b));
    return e;
}

DecodeStep decode_step(Tape& tape, std::size_t y_prev, const Tensor& s_prev, const Tensor& enc,
                       const CaptionerParams& p, const Tensor* enc_proj) {
    if (y_prev >= p.embedding.extent(0)) {
        throw ContractError("decode_step: word index " + std::to_string(y_prev) +
                            " out of range for K=" + std::to_string(p.embedding.extent(0)));
    }
    AttentionOutput att = enc_proj
                              ? attend_projected(tape, s_prev, enc, *enc_proj, p.attn)
                              : attend(tape, s_prev, enc, p.attn);
    Tensor x = concat(tape, {row(tape, p.embedding, y_prev), att.context}, 0);
    GruStep step = gru_step(tape, x, s_prev, p.gru);
    DecodeStep out;
    out.logits = add(tape, matvec(tape, p.out_w, step.h), p.out_b);
    out.state = step.h;
    out.attn_weights = att.weights;
    out.context = att.context;
    return out;
}

namespace {

// <start> first, an <end> present, nothing but <pad> after the first <end>.
void validate_target(const Caption& target, std::size_t vocab) {
    const auto& t = target.tokens;
    if (t.size() < 2 || t.front() != Vocabulary::kStart) {
        throw ContractError("caption must start with <start> and contain at least one target");
    }
    bool saw_end = false;
    for (std::size_t i = 1; i < t.size(); ++i) {
        if (t[i] >= vocab) {
            throw ContractError("caption token out of vocabulary range");
        }
        if (t[i] == Vocabulary::kStart) {
            throw ContractError("caption contains interior <start>");
        }
        if (saw_end && t[i] != Vocabulary::kPad) {
            throw ContractError("caption continues after <end> with non-<pad> tokens");
        }
        if (t[i] == Vocabulary::kEnd) saw_end = true;
    }
    if (!saw_end) {
        throw ContractError("caption lacks <end>");
    }
}

}  // namespace

Tensor caption_nll(Tape& tape, const FeatureGrid& grid, const Caption& target,
                   const CaptionerParams& p) {
    validate_target(target, p.embedding.extent(0));
    Encoded enc = encode(tape, grid, p);
    Tensor enc_proj = matmul_nt(tape, enc.enc, p.attn.w_h);
    Tensor state = enc.h0;
    std::vector<Tensor> log_probs;
    for (std::size_t t = 0; t + 1 < target.tokens.size(); ++t) {
        const std::size_t gold = target.tokens[t + 1];
        if (gold == Vocabulary::kPad) break;  // only <pad> follows
        DecodeStep step = decode_step(tape, target.tokens[t], state, enc.enc, p, &enc_proj);
        log_probs.push_back(pick(tape, log_softmax(tape, step.logits), gold));
        state = step.state;
    }
    return scale(tape, sum(tape, concat(tape, log_probs, 0)), -1.0);
}

Generated generate(const FeatureGrid& grid, const CaptionerParams& p, std::size_t max_len) {
    if (max_len < 1) {
        throw ContractError("generate: max_len must be >= 1");
    }
    Tape tape(false);  // forward only
    Encoded enc = encode(tape, grid, p);
    Tensor enc_proj = matmul_nt(tape, enc.enc, p.attn.w_h);
    Tensor state = enc.h0;
    Generated g;
    g.caption.tokens.push_back(Vocabulary::kStart);
    std::size_t prev = Vocabulary::kStart;
    for (std::size_t t = 0; t < max_len; ++t) {
        DecodeStep step = decode_step(tape, prev, state, enc.enc, p, &enc_proj);
        const std::vector<double>& logits = step.logits.data();
        std::size_t best = 0;
        for (std::size_t i = 1; i < logits.size(); ++i) {
            if (logits[i] > logits[best]) best = i;  // ties keep the lower index
        }
        g.caption.tokens.push_back(best);
        g.attention.push_back(step.attn_weights.data());
        if (best == Vocabulary::kEnd) break;
        prev = best;
        state = step.state;
    }
    return g;
}

// ---------------------------------------------------------------------------
// checkpoints
// ---------------------------------------------------------------------------

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

void write_block(std::ostream& out, const std::string& name,
                 const std::vector<std::size_t>& shape, const std::vector<double>& values) {
    binio::put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    binio::put_u32(out, static_cast<std::uint32_t>(shape.size()));
    for (std::size_t e : shape) binio::put_u32(out, static_cast<std::uint32_t>(e));
    for (double v : values) binio::put_f64(out, v);
}

struct RawBlock {
    std::vector<std::size_t> shape;
    std::vector<double> values;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const CaptionerParams& params,
                     const std::vector<std::pair<std::string, std::vector<double>>>& extra) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write checkpoint file " + path.string());
    }
    out.write("CKPT", 4);
    binio::put_u32(out, kCheckpointVersion);
    for (const auto& [name, tensor] : params.named_blocks()) {
        write_block(out, name, tensor.shape(), tensor.data());
    }
    for (const auto& [name, values] : extra) {
        write_block(out, name, {values.size()}, values);
    }
    if (!out) {
        throw DataError("short write on checkpoint file " + path.string());
    }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot read checkpoint file " + path.string());
    }
    char magic[4];
    if (!in.read(magic, 4) || std::string(magic, 4) != "CKPT") {
        throw DataError("bad magic in checkpoint file " + path.string());
    }
    std::uint32_t version = 0;
    if (!binio::get_u32(in, version) || version != kCheckpointVersion) {
        throw DataError("unsupported checkpoint version in " + path.string());
    }

    std::map<std::string, RawBlock> blocks;
    std::vector<std::string> order;
    while (true) {
        std::uint32_t name_len = 0;
        if (!binio::get_u32(in, name_len)) break;  // clean EOF
        std::string name(name_len, '\0');
        if (!in.read(name.data(), name_len)) {
            throw DataError("truncated block name in " + path.string());
        }
        std::uint32_t rank = 0;
        if (!binio::get_u32(in, rank)) {
            throw DataError("truncated block header in " + path.string());
        }
        RawBlock block;
        std::size_t count = 1;
        for (std::uint32_t r = 0; r < rank; ++r) {
            std::uint32_t e = 0;
            if (!binio::get_u32(in, e)) {
                throw DataError("truncated block extents in " + path.string());
            }
            block.shape.push_back(e);
            count *= e;
        }
        block.values.resize(count);
        for (double& v : block.values) {
            if (!binio::get_f64(in, v)) {
                throw DataError("truncated block payload in " + path.string());
            }
        }
        order.push_back(name);
        blocks.emplace(std::move(name), std::move(block));
    }

    auto take = [&](const std::string& name) -> RawBlock {
        auto it = blocks.find(name);
        if (it == blocks.end()) {
            throw DataError("checkpoint " + path.string() + " lacks block '" + name + "'");
        }
        RawBlock b = std::move(it->second);
        blocks.erase(it);
        return b;
    };
    auto tensor_of = [&](const std::string& name) {
        RawBlock b = take(name);
        return Tensor::from_values(b.shape, std::move(b.values), true);
    };

    Checkpoint ck;
    ck.params.enc_w = tensor_of("enc_proj.w");
    ck.params.enc_b = tensor_of("enc_proj.b");
    ck.params.init_w = tensor_of("init_proj.w");
    ck.params.init_b = tensor_of("init_proj.b");
    ck.params.embedding = tensor_of("embedding");
    ck.params.gru.w_z = tensor_of("gru.w_z");
    ck.params.gru.u_z = tensor_of("gru.u_z");
    ck.params.gru.b_z = tensor_of("gru.b_z");
    ck.params.gru.w_r = tensor_of("gru.w_r");
    ck.params.gru.u_r = tensor_of("gru.u_r");
    ck.params.gru.b_r = tensor_of("gru.b_r");
    ck.params.gru.w_h = tensor_of("gru.w_h");
    ck.params.gru.u_h = tensor_of("gru.u_h");
    ck.params.gru.b_h = tensor_of("gru.b_h");
    ck.params.attn.w_s = tensor_of("attn.w_s");
    ck.params.attn.w_h = tensor_of("attn.w_h");
    ck.params.attn.v = tensor_of("attn.v");
    ck.params.out_w = tensor_of("out_proj.w");
    ck.params.out_b = tensor_of("out_proj.b");
    ck.params.validate();

    for (const std::string& name : order) {
        auto it = blocks.find(name);
        if (it != blocks.end()) {
            ck.extra.emplace_back(name, std::move(it->second.values));
            blocks.erase(it);
        }
    }
    return ck;
}

std::optional<std::vector<double>> Checkpoint::find(const std::string& name) const {
    for (const auto& [n, values] : extra) {
        if (n == name) return values;
    }
    return std::nullopt;
}

}  // namespace grucap
