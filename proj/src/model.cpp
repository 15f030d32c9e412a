#include "sitent/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sitent {

std::string_view to_string(ModelVariant v) {
    switch (v) {
        case ModelVariant::ClauseLevel: return "clause";
        case ModelVariant::Paragraph: return "paragraph";
        case ModelVariant::ParagraphCRF: return "paragraph-crf";
    }
    return "?";
}

std::optional<ModelVariant> parse_variant(std::string_view s) {
    if (s == "clause") return ModelVariant::ClauseLevel;
    if (s == "paragraph") return ModelVariant::Paragraph;
    if (s == "paragraph-crf") return ModelVariant::ParagraphCRF;
    return std::nullopt;
}

ModelParams ModelParams::init(ModelVariant v, std::size_t input_dim, std::size_t hidden,
                              std::uint64_t seed) {
    ModelParams m;
    m.variant = v;
    m.input_dim = input_dim;
    m.hidden = hidden;
    Rng rng(seed);
    m.word = BiLstmParams::zeros(input_dim, hidden);
    m.word.init(rng);
    if (m.has_clause_layer()) {
        m.clause = BiLstmParams::zeros(2 * hidden, hidden);
        m.clause.init(rng);
    }
    m.head = AffineParams::zeros(2 * hidden, kNumLabels);
    m.head.init(rng);
    if (m.has_crf()) m.crf = TransitionParams::zeros(kNumLabels);
    return m;
}

ModelParams ModelParams::zeros_like(const ModelParams& other) {
    ModelParams m;
    m.variant = other.variant;
    m.input_dim = other.input_dim;
    m.hidden = other.hidden;
    m.word = BiLstmParams::zeros(other.input_dim, other.hidden);
    if (m.has_clause_layer()) m.clause = BiLstmParams::zeros(2 * other.hidden, other.hidden);
    m.head = AffineParams::zeros(2 * other.hidden, kNumLabels);
    if (m.has_crf()) m.crf = TransitionParams::zeros(kNumLabels);
    return m;
}

namespace {

void add_tensor(std::vector<TensorRef>& out, std::string name, Matrix& m, bool weight) {
    out.push_back({std::move(name), m.data(), m.size(), weight});
}
void add_tensor(std::vector<TensorRef>& out, std::string name, std::vector<double>& v, bool weight) {
    out.push_back({std::move(name), v.data(), v.size(), weight});
}

void add_cell(std::vector<TensorRef>& out, const std::string& prefix, LstmCellParams& c) {
    add_tensor(out, prefix + ".w_x", c.w_x, true);
    add_tensor(out, prefix + ".w_h", c.w_h, true);
    add_tensor(out, prefix + ".b", c.b, false);
}

}  // namespace

std::vector<TensorRef> collect_tensors(ModelParams& m) {
    std::vector<TensorRef> out;
    add_cell(out, "word.fwd", m.word.fwd);
    add_cell(out, "word.bwd", m.word.bwd);
    if (m.has_clause_layer()) {
        add_cell(out, "clause.fwd", m.clause.fwd);
        add_cell(out, "clause.bwd", m.clause.bwd);
    }
    add_tensor(out, "head.w", m.head.w, true);
    add_tensor(out, "head.b", m.head.b, false);
    if (m.has_crf()) {
        add_tensor(out, "crf.trans", m.crf.trans, true);
        add_tensor(out, "crf.start", m.crf.start, false);
        add_tensor(out, "crf.end", m.crf.end, false);
    }
    return out;
}

Matrix forward_paragraph(const ModelParams& m, const FeatureVectorizer::ParagraphFeatures& pf,
                         const DropoutSpec& dropout, Rng* rng, ForwardTrace* trace,
                         bool mask_connectives) {
    if (pf.x.cols != m.input_dim) throw std::runtime_error("forward_paragraph: input width mismatch");
    if (pf.spans.empty()) throw std::runtime_error("forward_paragraph: no clauses");
    if (dropout.train && dropout.rate > 0.0 && rng == nullptr)
        throw std::runtime_error("forward_paragraph: train-mode dropout needs an rng");

    const std::size_t len = pf.x.rows;
    const std::size_t n = pf.spans.size();
    const std::size_t width = 2 * m.hidden;

    ForwardTrace local;
    ForwardTrace& tr = trace ? *trace : local;
    const bool record = trace != nullptr;

    tr.x = pf.x;
    dropout_forward(dropout, rng, tr.x, record ? &tr.m_in1 : nullptr);

    if (m.variant == ModelVariant::ClauseLevel) {
        tr.segments = pf.spans;  // the word Bi-LSTM never crosses clause bounds
    } else {
        tr.segments = {Span{0, len}};
    }

    tr.word_out = Matrix(len, width);
    tr.word_tapes.assign(tr.segments.size(), {});
    for (std::size_t s = 0; s < tr.segments.size(); ++s) {
        bilstm_segment(m.word, tr.x, tr.segments[s].begin, tr.segments[s].end, tr.word_out,
                       record ? &tr.word_tapes[s] : nullptr);
    }
    dropout_forward(dropout, rng, tr.word_out, record ? &tr.m_out1 : nullptr);

    tr.pooled = span_max_pool(tr.word_out, pf.spans, mask_connectives ? &pf.connective : nullptr,
                              record ? &tr.pool_tape : nullptr);

    if (m.has_clause_layer()) {
        tr.clause_in = tr.pooled;
        dropout_forward(dropout, rng, tr.clause_in, record ? &tr.m_in2 : nullptr);
        Matrix clause_out(n, width);
        bilstm_segment(m.clause, tr.clause_in, 0, n, clause_out, record ? &tr.clause_tape : nullptr);
        dropout_forward(dropout, rng, clause_out, record ? &tr.m_out2 : nullptr);
        tr.head_in = std::move(clause_out);
    } else {
        tr.head_in = tr.pooled;
    }

    tr.emissions = Matrix(n, kNumLabels);
    for (std::size_t t = 0; t < n; ++t) {
        auto logits = affine_forward(m.head, tr.head_in.row(t));
        std::copy(logits.begin(), logits.end(), tr.emissions.row(t));
    }
    return tr.emissions;
}

namespace {

void backward_from_emissions(const ModelParams& m, const ForwardTrace& tr, const Matrix& dem,
                             ModelParams& grads) {
    const std::size_t n = dem.rows;
    const std::size_t width = 2 * m.hidden;

    Matrix dhead_in(n, width);
    for (std::size_t t = 0; t < n; ++t)
        affine_backward(m.head, tr.head_in.row(t), dem.row(t), grads.head, dhead_in.row(t));

    Matrix dword(tr.word_out.rows, width);
    if (m.has_clause_layer()) {
        dropout_backward(tr.m_out2, dhead_in);
        Matrix dclause_in(n, width);
        bilstm_segment_backward(m.clause, tr.clause_in, tr.clause_tape, dhead_in, grads.clause,
                                &dclause_in);
        dropout_backward(tr.m_in2, dclause_in);
        span_max_pool_backward(tr.pool_tape, dclause_in, dword);
    } else {
        span_max_pool_backward(tr.pool_tape, dhead_in, dword);
    }
    dropout_backward(tr.m_out1, dword);
    for (std::size_t s = 0; s < tr.segments.size(); ++s)
        lstm_backward(m.word.fwd, tr.x, tr.word_tapes[s].fwd, dword, 0, grads.word.fwd, nullptr),
            lstm_backward(m.word.bwd, tr.x, tr.word_tapes[s].bwd, dword, m.hidden, grads.word.bwd,
                          nullptr);
}

std::vector<std::size_t> gold_indices(const Paragraph& p) {
    std::vector<std::size_t> out;
    out.reserve(p.clauses.size());
    for (const auto& c : p.clauses) {
        if (!c.gold) throw std::runtime_error("paragraph " + p.doc_id + " has an unlabeled clause");
        out.push_back(static_cast<std::size_t>(*c.gold));
    }
    return out;
}

double l2_penalty(const ModelParams& m, double l2_lambda) {
    if (l2_lambda == 0.0) return 0.0;
    auto tensors = collect_tensors(const_cast<ModelParams&>(m));  // read-only walk
    double s = 0.0;
    for (const auto& t : tensors) {
        if (!t.weight_matrix) continue;
        for (std::size_t i = 0; i < t.size; ++i) s += t.data[i] * t.data[i];
    }
    return l2_lambda * s;
}

void l2_gradient(const ModelParams& m, double l2_lambda, ModelParams& grads) {
    if (l2_lambda == 0.0) return;
    auto pt = collect_tensors(const_cast<ModelParams&>(m));
    auto gt = collect_tensors(grads);
    for (std::size_t k = 0; k < pt.size(); ++k) {
        if (!pt[k].weight_matrix) continue;
        for (std::size_t i = 0; i < pt[k].size; ++i) gt[k].data[i] += 2.0 * l2_lambda * pt[k].data[i];
    }
}

}  // namespace

double paragraph_loss(const ModelParams& m, const FeatureVectorizer::ParagraphFeatures& pf,
                      const std::vector<std::size_t>& gold, const DropoutSpec& dropout, Rng* rng,
                      ModelParams* grads, double weight, bool mask_connectives) {
    ForwardTrace trace;
    const Matrix em =
        forward_paragraph(m, pf, dropout, rng, grads ? &trace : nullptr, mask_connectives);
    if (gold.size() != em.rows) throw std::runtime_error("paragraph_loss: gold length mismatch");

    Matrix dem(em.rows, kNumLabels);
    double loss = 0.0;
    if (m.has_crf()) {
        loss = crf_nll(m.crf, em, gold, grads ? &dem : nullptr, grads ? &grads->crf : nullptr, weight);
    } else {
        std::vector<double> logits(kNumLabels);
        for (std::size_t t = 0; t < em.rows; ++t) {
            std::copy(em.row(t), em.row(t) + kNumLabels, logits.begin());
            loss += softmax_nll(logits, gold[t], grads ? dem.row(t) : nullptr, weight);
        }
    }
    if (grads) backward_from_emissions(m, trace, dem, *grads);
    return loss;
}

double batch_loss(const ModelParams& m,
                  const std::vector<const FeatureVectorizer::ParagraphFeatures*>& batch,
                  const std::vector<std::vector<std::size_t>>& gold, double l2_lambda,
                  const DropoutSpec& dropout, Rng* rng, ModelParams* grads, bool mask_connectives) {
    if (batch.empty() || batch.size() != gold.size()) throw std::runtime_error("batch_loss: bad batch");
    const double paragraphs = static_cast<double>(batch.size());
    std::size_t total_clauses = 0;
    for (const auto& g : gold) total_clauses += g.size();

    double loss = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const double n_i = static_cast<double>(gold[i].size());
        const double w = m.has_crf() ? 1.0 / (paragraphs * n_i) : 1.0 / static_cast<double>(total_clauses);
        const double raw =
            paragraph_loss(m, *batch[i], gold[i], dropout, rng, grads, w, mask_connectives);
        loss += m.has_crf() ? raw / (n_i * paragraphs) : raw / static_cast<double>(total_clauses);
    }
    loss += l2_penalty(m, l2_lambda);
    if (grads) l2_gradient(m, l2_lambda, *grads);
    return loss;
}

double global_grad_norm(const std::vector<TensorRef>& grads) {
    double s = 0.0;
    for (const auto& t : grads)
        for (std::size_t i = 0; i < t.size; ++i) s += t.data[i] * t.data[i];
    return std::sqrt(s);
}

void clip_gradients(std::vector<TensorRef>& grads, double max_norm) {
    const double norm = global_grad_norm(grads);
    if (norm <= max_norm || norm == 0.0) return;
    const double scale = max_norm / norm;
    for (auto& t : grads)
        for (std::size_t i = 0; i < t.size; ++i) t.data[i] *= scale;
}

void adam_step(std::vector<TensorRef>& params, const std::vector<TensorRef>& grads,
               AdamState& state, const TrainConfig& cfg) {
    std::size_t total = 0;
    for (const auto& t : params) total += t.size;
    if (state.m.size() != total) {
        state.m.assign(total, 0.0);
        state.v.assign(total, 0.0);
        state.t = 0;
    }
    state.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.t));

    std::size_t off = 0;
    for (std::size_t k = 0; k < params.size(); ++k) {
        if (params[k].size != grads[k].size) throw std::runtime_error("adam_step: tensor mismatch");
        double* x = params[k].data;
        const double* g = grads[k].data;
        for (std::size_t i = 0; i < params[k].size; ++i) {
            double& mm = state.m[off + i];
            double& vv = state.v[off + i];
            mm = cfg.adam_beta1 * mm + (1.0 - cfg.adam_beta1) * g[i];
            vv = cfg.adam_beta2 * vv + (1.0 - cfg.adam_beta2) * g[i] * g[i];
            x[i] -= cfg.learning_rate * (mm / bc1) / (std::sqrt(vv / bc2) + cfg.adam_eps);
        }
        off += params[k].size;
    }
}

namespace {

std::vector<SELabel> decode_paragraph(const ModelParams& m, const Matrix& em) {
    std::vector<SELabel> out(em.rows);
    if (m.has_crf()) {
        auto path = viterbi_decode(m.crf, em);
        for (std::size_t t = 0; t < path.size(); ++t) out[t] = static_cast<SELabel>(path[t]);
    } else {
        for (std::size_t t = 0; t < em.rows; ++t) {
            std::size_t arg = 0;
            for (std::size_t j = 1; j < kNumLabels; ++j)
                if (em(t, j) > em(t, arg)) arg = j;  // lower index wins ties
            out[t] = static_cast<SELabel>(arg);
        }
    }
    return out;
}

}  // namespace

std::vector<std::vector<SELabel>> predict(const ModelParams& m, const FeatureVectorizer& fv,
                                          const Dataset& d, bool mask_connectives,
                                          std::size_t workers) {
    std::vector<std::vector<SELabel>> out(d.paragraphs.size());
    const DropoutSpec inference{0.0, false, 0};

    if (workers <= 1) {
        for (std::size_t i = 0; i < d.paragraphs.size(); ++i) {
            const auto pf = fv.vectorize_paragraph(d.paragraphs[i]);
            out[i] = decode_paragraph(m, forward_paragraph(m, pf, inference, nullptr, nullptr,
                                                           mask_connectives));
        }
        return out;
    }

    std::exception_ptr error;
    const std::int64_t count = static_cast<std::int64_t>(d.paragraphs.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(static_cast<int>(workers))
#endif
    for (std::int64_t i = 0; i < count; ++i) {
        try {
            const auto pf = fv.vectorize_paragraph(d.paragraphs[static_cast<std::size_t>(i)]);
            out[static_cast<std::size_t>(i)] = decode_paragraph(
                m, forward_paragraph(m, pf, inference, nullptr, nullptr, mask_connectives));
        } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
    return out;
}

std::vector<SELabel> flatten_gold(const Dataset& d) {
    std::vector<SELabel> out;
    for (const auto& p : d.paragraphs)
        for (const auto& c : p.clauses) {
            if (!c.gold) throw std::runtime_error("flatten_gold: unlabeled clause in " + p.doc_id);
            out.push_back(*c.gold);
        }
    return out;
}

std::vector<SELabel> flatten(const std::vector<std::vector<SELabel>>& per_paragraph) {
    std::vector<SELabel> out;
    for (const auto& p : per_paragraph) out.insert(out.end(), p.begin(), p.end());
    return out;
}

std::vector<std::vector<std::size_t>> pack_batches(const std::vector<std::size_t>& order,
                                                   const std::vector<std::size_t>& clause_counts,
                                                   std::size_t batch_se) {
    std::vector<std::vector<std::size_t>> batches;
    std::vector<std::size_t> cur;
    std::size_t cur_clauses = 0;
    for (std::size_t idx : order) {
        cur.push_back(idx);
        cur_clauses += clause_counts[idx];
        if (cur_clauses >= batch_se) {
            batches.push_back(std::move(cur));
            cur.clear();
            cur_clauses = 0;
        }
    }
    if (!cur.empty()) batches.push_back(std::move(cur));
    return batches;
}

TrainResult train(ModelVariant v, const TrainConfig& cfg, const FeatureVectorizer& fv,
                  const Dataset& train_set, const TrainOptions& opts) {
    if (train_set.paragraphs.empty()) throw std::runtime_error("train: empty training set");
    const std::size_t num_para = train_set.paragraphs.size();

    std::vector<std::vector<std::size_t>> gold(num_para);
    for (std::size_t i = 0; i < num_para; ++i) gold[i] = gold_indices(train_set.paragraphs[i]);

    ModelParams params = ModelParams::init(v, fv.dim(), cfg.hidden_units,
                                           derive_seed(cfg.seed, 0x1A17));
    auto param_refs = collect_tensors(params);

    const std::size_t workers = std::max<std::size_t>(1, cfg.workers);
    std::vector<ModelParams> buffers;
    buffers.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) buffers.push_back(ModelParams::zeros_like(params));
    std::vector<std::vector<TensorRef>> buffer_refs;
    for (auto& b : buffers) buffer_refs.push_back(collect_tensors(b));

    ModelParams grads = ModelParams::zeros_like(params);
    auto grad_refs = collect_tensors(grads);

    AdamState adam;
    TrainResult result;
    double best_macro = -1.0;
    std::vector<SELabel> dev_gold;
    if (opts.dev) dev_gold = flatten_gold(*opts.dev);

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        Rng erng(derive_seed(cfg.seed, epoch));
        std::vector<std::size_t> order(num_para);
        std::iota(order.begin(), order.end(), 0);
        erng.shuffle(order);

        std::vector<std::size_t> clause_counts(num_para);
        for (std::size_t i = 0; i < num_para; ++i) clause_counts[i] = gold[i].size();
        const auto batches = pack_batches(order, clause_counts, cfg.batch_se);

        double epoch_loss_num = 0.0;
        double epoch_loss_den = 0.0;

        for (std::size_t bi = 0; bi < batches.size(); ++bi) {
            const auto& batch = batches[bi];
            const double n_batch_paras = static_cast<double>(batch.size());
            std::size_t batch_clauses = 0;
            for (std::size_t idx : batch) batch_clauses += gold[idx].size();

            std::vector<std::uint64_t> pseeds(batch.size());
            for (auto& s : pseeds) s = erng.next();

            for (auto& b : buffers)
                for (auto& t : collect_tensors(b)) std::fill(t.data, t.data + t.size, 0.0);

            std::vector<double> thread_loss(workers, 0.0);
            const bool crf = params.has_crf();
            const DropoutSpec dspec{cfg.dropout, true, 0};

            auto process = [&](std::size_t k, std::size_t tid) {
                const std::size_t idx = batch[k];
                const double n_i = static_cast<double>(gold[idx].size());
                const double w = crf ? 1.0 / (n_batch_paras * n_i)
                                     : 1.0 / static_cast<double>(batch_clauses);
                const auto pf = fv.vectorize_paragraph(train_set.paragraphs[idx]);
                Rng prng(pseeds[k]);
                const double raw = paragraph_loss(params, pf, gold[idx], dspec, &prng,
                                                  &buffers[tid], w, opts.mask_connectives);
                thread_loss[tid] += crf ? raw / (n_i * n_batch_paras)
                                        : raw / static_cast<double>(batch_clauses);
            };

            if (workers <= 1) {
                for (std::size_t k = 0; k < batch.size(); ++k) process(k, 0);
            } else {
                std::exception_ptr error;
                const std::int64_t count = static_cast<std::int64_t>(batch.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(static_cast<int>(workers))
#endif
                for (std::int64_t k = 0; k < count; ++k) {
                    try {
#ifdef _OPENMP
                        const std::size_t tid = static_cast<std::size_t>(omp_get_thread_num());
#else
                        const std::size_t tid = 0;
#endif
                        process(static_cast<std::size_t>(k), tid);
                    } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
                        if (!error) error = std::current_exception();
                    }
                }
                if (error) std::rethrow_exception(error);
            }

            // accumulate per-thread buffers in thread order, then the L2 term
            double loss = 0.0;
            for (std::size_t t = 0; t < workers; ++t) loss += thread_loss[t];
            for (std::size_t t = 0; t < workers; ++t)
                for (std::size_t k = 0; k < grad_refs.size(); ++k)
                    for (std::size_t i = 0; i < grad_refs[k].size; ++i)
                        grad_refs[k].data[i] += buffer_refs[t][k].data[i];

            loss += l2_penalty(params, cfg.l2_lambda);
            l2_gradient(params, cfg.l2_lambda, grads);

            if (!std::isfinite(loss))
                throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                         std::to_string(epoch) + ", batch " + std::to_string(bi));

            clip_gradients(grad_refs, cfg.clip_norm);
            adam_step(param_refs, grad_refs, adam, cfg);
            for (auto& t : grad_refs) std::fill(t.data, t.data + t.size, 0.0);

            const double unit = crf ? n_batch_paras : static_cast<double>(batch_clauses);
            epoch_loss_num += loss * unit;
            epoch_loss_den += unit;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = epoch_loss_den > 0 ? epoch_loss_num / epoch_loss_den : 0.0;
        if (opts.dev) {
            auto pred = predict(params, fv, *opts.dev, opts.mask_connectives, cfg.workers);
            stats.dev = score(dev_gold, flatten(pred));
            if (stats.dev->macro_f1 > best_macro) {
                best_macro = stats.dev->macro_f1;
                result.params = params;
                result.best_epoch = epoch;
            }
        }
        result.history.push_back(stats);
        if (opts.on_epoch && !opts.on_epoch(stats)) break;
    }

    if (!opts.dev || result.best_epoch == 0) {
        result.params = params;
        result.best_epoch = result.history.size();
    }
    return result;
}

RepeatedRuns run_repeated(ModelVariant v, const TrainConfig& cfg, const FeatureVectorizer& fv,
                          const Dataset& train_set, const Dataset& test_set,
                          std::vector<std::uint64_t> seeds) {
    if (cfg.runs < 1) throw std::runtime_error("run_repeated: runs must be >= 1");
    if (seeds.empty()) {
        seeds.resize(cfg.runs);
        for (std::size_t r = 0; r < cfg.runs; ++r) seeds[r] = derive_seed(cfg.seed, 0xBA5E + r);
    }
    RepeatedRuns out;
    const auto test_gold = flatten_gold(test_set);
    for (std::size_t r = 0; r < seeds.size(); ++r) {
        TrainConfig run_cfg = cfg;
        run_cfg.seed = seeds[r];
        auto trained = train(v, run_cfg, fv, train_set, {});
        auto pred = predict(trained.params, fv, test_set, false, cfg.workers);
        out.per_run.push_back(score(test_gold, flatten(pred)));
    }
    out.summary = summarize(out.per_run);
    return out;
}

}  // namespace sitent
