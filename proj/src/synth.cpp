#include "sitent/synth.hpp"

#include <algorithm>
#include <stdexcept>

#include "sitent/rng.hpp"

namespace sitent {

namespace {

const std::vector<std::string> kTriggers = {"glimmer", "harvest", "quarry", "lantern",
                                            "meadow",  "anchor",  "compass"};

// clause-initial phrases, all present in the shipped lexicon
const std::vector<std::vector<std::string>> kConnectivePhrases = {
    {"for", "example"}, {"however"},      {"in", "addition"}, {"as", "a", "result"},
    {"on", "the", "other", "hand"},       {"therefore"},      {"in", "contrast"}};

const std::vector<std::string> kFillerPos = {"DT", "JJ", "NN", "VB", "RB", "IN"};

Token make_token(std::string surface, std::string pos) {
    Token t;
    t.surface = std::move(surface);
    t.pos = std::move(pos);
    t.ne = "O";
    return t;
}

std::string filler_surface(Rng& rng, const SynthOptions& opt) {
    return "w" + std::to_string(rng.uniform_int(std::max<std::size_t>(1, opt.filler_vocab)));
}

Clause make_clause(Rng& rng, const SynthOptions& opt, SELabel label,
                   const std::string& trigger) {
    Clause c;
    c.gold = label;
    c.tokens.push_back(make_token(trigger, "NN"));
    for (std::size_t i = 0; i < opt.fillers_per_clause; ++i) {
        c.tokens.push_back(
            make_token(filler_surface(rng, opt), kFillerPos[rng.uniform_int(kFillerPos.size())]));
    }
    rng.shuffle(c.tokens);
    return c;
}

void finish_paragraph(Paragraph& p, Dataset& d, const SynthOptions& opt, std::size_t ordinal,
                      const std::string& kind) {
    p.doc_id = "synth-" + kind + "-" + std::to_string(ordinal);
    p.genre = "g" + std::to_string(ordinal % std::max<std::size_t>(1, opt.genres));
    for (std::size_t i = 0; i < p.clauses.size(); ++i) p.clauses[i].clause_index = i;
    d.paragraphs.push_back(std::move(p));
}

std::size_t pick_length(Rng& rng, const SynthOptions& opt) {
    if (opt.max_clauses <= opt.min_clauses) return opt.min_clauses;
    return opt.min_clauses + rng.uniform_int(opt.max_clauses - opt.min_clauses + 1);
}

}  // namespace

Dataset synth_keyword(const SynthOptions& opt) {
    Dataset d;
    Rng rng(opt.seed);
    for (std::size_t pi = 0; pi < opt.paragraphs; ++pi) {
        Paragraph p;
        const std::size_t len = pick_length(rng, opt);
        for (std::size_t ci = 0; ci < len; ++ci) {
            const std::size_t li = rng.uniform_int(kNumLabels);
            p.clauses.push_back(make_clause(rng, opt, static_cast<SELabel>(li), kTriggers[li]));
        }
        finish_paragraph(p, d, opt, pi, "keyword");
    }
    d.rebuild_genre_inventory();
    return d;
}

Dataset synth_context(const SynthOptions& opt) {
    // trigger k in clause i-1 fixes the label of clause i; every clause
    // carries a trigger so clause content alone is uninformative
    static const std::array<SELabel, 4> context_labels = {SELabel::Event, SELabel::Report,
                                                          SELabel::Generic, SELabel::Question};
    Dataset d;
    Rng rng(opt.seed);
    for (std::size_t pi = 0; pi < opt.paragraphs; ++pi) {
        Paragraph p;
        const std::size_t len = std::max<std::size_t>(2, pick_length(rng, opt));
        std::vector<std::size_t> trig(len);
        for (auto& t : trig) t = rng.uniform_int(context_labels.size());
        for (std::size_t ci = 0; ci < len; ++ci) {
            const SELabel label = ci == 0 ? SELabel::State : context_labels[trig[ci - 1]];
            p.clauses.push_back(make_clause(rng, opt, label, kTriggers[trig[ci]]));
        }
        finish_paragraph(p, d, opt, pi, "context");
    }
    d.rebuild_genre_inventory();
    return d;
}

Dataset synth_label_runs(const SynthOptions& opt) {
    const std::size_t k = std::clamp<std::size_t>(opt.run_label_count, 2, kNumLabels);
    Dataset d;
    Rng rng(opt.seed);
    for (std::size_t pi = 0; pi < opt.paragraphs; ++pi) {
        Paragraph p;
        const std::size_t len = pick_length(rng, opt);
        std::size_t state = rng.uniform_int(k);
        for (std::size_t ci = 0; ci < len; ++ci) {
            if (ci > 0 && rng.uniform01() >= opt.stay_prob)
                state = (state + 1 + rng.uniform_int(k - 1)) % k;
            // noisy evidence: the trigger lies with probability 1 - fidelity
            std::size_t shown = state;
            if (rng.uniform01() >= opt.trigger_fidelity)
                shown = (state + 1 + rng.uniform_int(k - 1)) % k;
            p.clauses.push_back(
                make_clause(rng, opt, static_cast<SELabel>(state), kTriggers[shown]));
        }
        finish_paragraph(p, d, opt, pi, "labelruns");
    }
    d.rebuild_genre_inventory();
    return d;
}

Dataset synth_connective(const SynthOptions& opt) {
    Dataset d;
    Rng rng(opt.seed);
    for (std::size_t pi = 0; pi < opt.paragraphs; ++pi) {
        Paragraph p;
        const std::size_t len = pick_length(rng, opt);
        for (std::size_t ci = 0; ci < len; ++ci) {
            if (rng.uniform01() < opt.plain_clause_prob) {
                p.clauses.push_back(make_clause(rng, opt, SELabel::State,
                                                filler_surface(rng, opt)));
                continue;
            }
            const std::size_t k = rng.uniform_int(kConnectivePhrases.size());
            Clause c;
            c.gold = static_cast<SELabel>(k);
            for (const auto& w : kConnectivePhrases[k]) c.tokens.push_back(make_token(w, "IN"));
            for (std::size_t f = 0; f < opt.fillers_per_clause; ++f)
                c.tokens.push_back(make_token(filler_surface(rng, opt),
                                              kFillerPos[rng.uniform_int(kFillerPos.size())]));
            p.clauses.push_back(std::move(c));
        }
        finish_paragraph(p, d, opt, pi, "connective");
    }
    d.rebuild_genre_inventory();
    return d;
}

Dataset synth_genre_rule(const SynthOptions& opt) {
    Dataset d;
    Rng rng(opt.seed);
    for (std::size_t pi = 0; pi < opt.paragraphs; ++pi) {
        const bool shifted = pi % std::max<std::size_t>(2, opt.genres) == 0;
        Paragraph p;
        const std::size_t len = pick_length(rng, opt);
        for (std::size_t ci = 0; ci < len; ++ci) {
            const std::size_t trig = rng.uniform_int(kNumLabels);
            const std::size_t li = shifted ? (trig + 1) % kNumLabels : trig;
            p.clauses.push_back(make_clause(rng, opt, static_cast<SELabel>(li), kTriggers[trig]));
        }
        finish_paragraph(p, d, opt, pi, "genrerule");
    }
    d.rebuild_genre_inventory();
    return d;
}

const std::vector<std::string>& synth_kinds() {
    static const std::vector<std::string> kinds = {"keyword", "context", "labelruns", "connective",
                                                   "genrerule"};
    return kinds;
}

Dataset make_synth(const std::string& kind, const SynthOptions& opt) {
    if (kind == "keyword") return synth_keyword(opt);
    if (kind == "context") return synth_context(opt);
    if (kind == "labelruns") return synth_label_runs(opt);
    if (kind == "connective") return synth_connective(opt);
    if (kind == "genrerule") return synth_genre_rule(opt);
    throw std::runtime_error("unknown synthetic corpus kind: " + kind);
}

}  // namespace sitent
