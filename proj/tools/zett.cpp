// Copyright 2026 The zett Authors.
// SPDX-License-Identifier: Apache-2.0
//
// zett: command-line front end for data preparation, training, extraction,
// evaluation, calibration, template generation, human evaluation and the
// synthetic benchmark.

#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "zett/zett.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace zett;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

// ---------------------------------------------------------------------------
// Resolved configuration: flat dotted keys, file first, flags on top.

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  DecodeConfig decode;
  FilterConfig filter;
  std::string mode = "single";
  std::optional<double> multi_threshold;
  std::string template_policy = "first";
  int min_count = 1;
  std::size_t embed_dim = 256;
  bool all_templates = true;
  std::uint64_t seed = 0;
  int threads = 0;

  PredictionConfig prediction() const {
    PredictionConfig p;
    p.mode = mode == "multi" ? PredictionMode::Multi : PredictionMode::Single;
    p.multi_threshold = multi_threshold;
    p.decode = decode;
    p.filter = filter;
    p.template_policy = template_policy == "max" ? TemplatePolicy::MaxOverTemplates : TemplatePolicy::First;
    p.threads = resolve_threads(threads);
    return p;
  }
};

struct Key {
  std::function<json(const RunConfig&)> get;
  std::function<void(RunConfig&, const json&)> set;
};

template <typename T, typename M>
Key field(M member) {
  return {[member](const RunConfig& c) { return json(std::invoke(member, c)); },
          [member](RunConfig& c, const json& v) { std::invoke(member, c) = v.get<T>(); }};
}

const std::map<std::string, Key>& keys() {
  static const std::map<std::string, Key> k = {
      {"model.d_model", field<int>([](auto& c) -> auto& { return c.model.d_model; })},
      {"model.heads", field<int>([](auto& c) -> auto& { return c.model.heads; })},
      {"model.encoder_layers", field<int>([](auto& c) -> auto& { return c.model.encoder_layers; })},
      {"model.decoder_layers", field<int>([](auto& c) -> auto& { return c.model.decoder_layers; })},
      {"model.ffn_dim", field<int>([](auto& c) -> auto& { return c.model.ffn_dim; })},
      {"model.max_input_len", field<int>([](auto& c) -> auto& { return c.model.max_input_len; })},
      {"model.max_output_len", field<int>([](auto& c) -> auto& { return c.model.max_output_len; })},
      {"model.dropout", field<double>([](auto& c) -> auto& { return c.model.dropout; })},
      {"train.batch_size", field<int>([](auto& c) -> auto& { return c.train.batch_size; })},
      {"train.learning_rate", field<double>([](auto& c) -> auto& { return c.train.learning_rate; })},
      {"train.warmup_ratio", field<double>([](auto& c) -> auto& { return c.train.warmup_ratio; })},
      {"train.epochs", field<int>([](auto& c) -> auto& { return c.train.epochs; })},
      {"train.max_steps", field<int>([](auto& c) -> auto& { return c.train.max_steps; })},
      {"train.weight_decay", field<double>([](auto& c) -> auto& { return c.train.weight_decay; })},
      {"train.max_grad_norm", field<double>([](auto& c) -> auto& { return c.train.max_grad_norm; })},
      {"train.all_templates", field<bool>([](auto& c) -> auto& { return c.all_templates; })},
      {"decode.beam_size", field<int>([](auto& c) -> auto& { return c.decode.beam_size; })},
      {"decode.max_candidates_per_relation",
       field<int>([](auto& c) -> auto& { return c.decode.max_candidates_per_relation; })},
      {"decode.max_output_len", field<int>([](auto& c) -> auto& { return c.decode.max_output_len; })},
      {"decode.vocab_constraint", field<bool>([](auto& c) -> auto& { return c.decode.vocab_constraint; })},
      {"decode.greedy", field<bool>([](auto& c) -> auto& { return c.decode.greedy; })},
      {"filter.delta", field<double>([](auto& c) -> auto& { return c.filter.delta; })},
      {"filter.fallback_top1", field<bool>([](auto& c) -> auto& { return c.filter.fallback_top1; })},
      {"predict.mode", field<std::string>([](auto& c) -> auto& { return c.mode; })},
      {"predict.multi_threshold",
       {[](const RunConfig& c) { return c.multi_threshold ? json(*c.multi_threshold) : json(nullptr); },
        [](RunConfig& c, const json& v) {
          c.multi_threshold = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
        }}},
      {"predict.template_policy", field<std::string>([](auto& c) -> auto& { return c.template_policy; })},
      {"vocab.min_count", field<int>([](auto& c) -> auto& { return c.min_count; })},
      {"embedder.dimension", field<std::size_t>([](auto& c) -> auto& { return c.embed_dim; })},
      {"seed", field<std::uint64_t>([](auto& c) -> auto& { return c.seed; })},
      {"threads", field<int>([](auto& c) -> auto& { return c.threads; })},
  };
  return k;
}

void set_key(RunConfig& c, const std::string& key, const json& value) {
  const auto it = keys().find(key);
  if (it == keys().end()) throw DataError("unknown config key: " + key);
  try {
    it->second.set(c, value);
  } catch (const json::exception& e) {
    throw DataError("config key " + key + ": " + e.what());
  }
}

json resolved_json(const RunConfig& c) {
  json j = json::object();
  for (const auto& [k, key] : keys()) j[k] = key.get(c);
  return j;
}

void validate(const RunConfig& c) {
  if (c.mode != "single" && c.mode != "multi") throw DataError("predict.mode must be single or multi");
  if (c.template_policy != "first" && c.template_policy != "max")
    throw DataError("predict.template_policy must be first or max");
  c.decode.validate();
  c.train.validate();
  if (c.mode == "multi" && !c.multi_threshold) throw DataError("multi mode requires --threshold");
}

/// Value text from a flag: JSON scalars parse as such, anything else is a string.
json flag_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return json(text);
  }
}

// ---------------------------------------------------------------------------
// Per-invocation state shared by all subcommands.

struct Session {
  std::string config_path;
  std::string run_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool strict = false;

  /// (option, dotted key, fixed value for switches) bound on subcommands.
  struct Binding {
    CLI::Option* opt;
    std::string key;
    std::optional<json> fixed;
    std::string text;
  };
  std::vector<std::unique_ptr<Binding>> bindings;
  std::vector<std::string> inputs;
  RunConfig cfg;

  void bind(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    auto b = std::make_unique<Binding>();
    b->key = key;
    b->opt = app->add_option(flag, b->text, help + " [" + key + "]");
    bindings.push_back(std::move(b));
  }
  CLI::Option* bind_switch(CLI::App* app, const std::string& flag, const std::string& key, json value,
                           const std::string& help) {
    auto b = std::make_unique<Binding>();
    b->key = key;
    b->fixed = std::move(value);
    b->opt = app->add_flag(flag)->description(help + " [" + key + "]");
    auto* o = b->opt;
    bindings.push_back(std::move(b));
    return o;
  }
  /// The most recently bound value option for `key`.
  CLI::Option* option_of(const std::string& key) const {
    for (auto it = bindings.rbegin(); it != bindings.rend(); ++it)
      if ((*it)->key == key && !(*it)->fixed) return (*it)->opt;
    return nullptr;
  }

  void resolve() {
    if (!config_path.empty()) {
      inputs.push_back(config_path);
      json j;
      try {
        j = json::parse(read_file(config_path));
      } catch (const json::parse_error& e) {
        throw DataError("malformed config " + config_path + ": " + e.what());
      }
      if (!j.is_object()) throw DataError("config file must be a JSON object");
      for (auto it = j.begin(); it != j.end(); ++it) set_key(cfg, it.key(), it.value());
    }
    for (const auto& b : bindings) {
      if (b->opt->count() == 0) continue;
      set_key(cfg, b->key, b->fixed ? *b->fixed : flag_value(b->text));
    }
    if (seed) cfg.seed = *seed;
    if (threads) cfg.threads = *threads;
    cfg.train.seed = cfg.seed;
    validate(cfg);
  }

  const std::string& input(const std::string& path) {
    inputs.push_back(path);
    return path;
  }

  Dataset dataset(const std::string& data, const RelationRegistry& reg) {
    Dataset ds = load_dataset(input(data), reg);
    std::size_t flagged = 0;
    for (const auto& e : ds.examples) flagged += e.entity_not_in_context;
    if (flagged) {
      std::cerr << "warning: " << flagged << " row(s) in " << data
                << " have an entity that is not a span of the context"
                << (strict ? "; dropped (--strict)" : "") << "\n";
      if (strict) ds = drop_flagged(std::move(ds));
    }
    return ds;
  }

  /// resolved_config.json and manifest.json in the run directory.
  void finish(const std::string& command, const CLI::App* sub, const std::string& default_dir) const {
    std::string dir = run_dir.empty() ? default_dir : run_dir;
    if (dir.empty()) dir = ".";
    fs::create_directories(dir);
    json args = json::object();
    for (const auto* opt : sub->get_options()) {
      if (opt->count() == 0 || opt->get_name() == "--help") continue;
      const auto res = opt->results();
      args[opt->get_name()] = res.size() == 1 ? json(res.front()) : json(res);
    }
    const json resolved = {{"command", command}, {"args", args}, {"config", resolved_json(cfg)}};
    write_file((fs::path(dir) / "resolved_config.json").string(), resolved.dump(2) + "\n");
    json files = json::object();
    for (const auto& p : inputs)
      if (fs::exists(p)) files[p] = hex64(fnv1a64(read_file(p)));
    write_file((fs::path(dir) / "manifest.json").string(),
               json{{"command", command}, {"hash", "fnv1a64"}, {"inputs", files}}.dump(2) + "\n");
  }
};

std::string parent_dir(const std::string& path) {
  if (path.empty() || path == "-") return ".";
  const auto p = fs::path(path).parent_path();
  return p.empty() ? "." : p.string();
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    if (const auto p = fs::path(out).parent_path(); !p.empty()) fs::create_directories(p);
    write_file(out, text);
  }
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw UsageError("bad grid value: " + item);
    }
  }
  if (out.empty()) throw UsageError("empty grid");
  return out;
}

std::string relations_path(const std::string& explicit_path, const std::string& data_path) {
  if (!explicit_path.empty()) return explicit_path;
  return (fs::path(parent_dir(data_path)) / "relations.json").string();
}

struct LoadedModel {
  std::shared_ptr<Seq2SeqModel<float>> model;
  CheckpointMeta meta;
  Vocabulary vocab;
};

std::string default_vocab_path(const std::string& ckpt) { return ckpt + ".vocab.json"; }

LoadedModel load_model(Session& s, const std::string& ckpt, std::string vocab_path) {
  if (vocab_path.empty()) vocab_path = default_vocab_path(ckpt);
  auto [model, meta] = load_checkpoint<float>(s.input(ckpt));
  LoadedModel out{std::make_shared<Seq2SeqModel<float>>(std::move(model)), meta,
                  Vocabulary::load(s.input(vocab_path))};
  if (!meta.vocab_hash.empty() && meta.vocab_hash != out.vocab.hash())
    throw DataError("vocabulary " + vocab_path + " does not match checkpoint " + ckpt);
  return out;
}

std::unique_ptr<Embedder> make_embedder(Session& s, const std::string& path) {
  if (!path.empty()) return std::make_unique<PrecomputedEmbedder>(PrecomputedEmbedder::load(s.input(path)));
  return std::make_unique<HashedBowEmbedder>(s.cfg.embed_dim);
}

std::vector<RelationSpec> pool_of(const RelationRegistry& reg, const std::string& fold_path,
                                  const std::string& which, Session& s) {
  if (fold_path.empty()) return reg.specs();
  const FoldSpec f = FoldSpec::load(s.input(fold_path));
  if (which == "test") return reg.subset(f.test);
  if (which == "validation") return reg.subset(f.validation);
  if (which == "train") return reg.subset(f.train);
  if (which == "all") return reg.specs();
  throw UsageError("--pool must be test, validation, train or all");
}

Dataset restrict_to(const Dataset& ds, const std::vector<RelationSpec>& pool) {
  std::set<std::string> ids;
  for (const auto& r : pool) ids.insert(r.id);
  return project(ds, ids);
}

json prf_json(const PRF& p) { return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}}; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zett: zero-shot triplet extraction by template infilling"};
  app.require_subcommand(1);
  app.fallthrough();
  Session s;
  app.add_option("--config", s.config_path, "JSON config with flat dotted keys");
  app.add_option("--run-dir", s.run_dir, "where resolved_config.json and manifest.json go");
  app.add_option("--seed", s.seed, "master seed");
  app.add_option("--threads", s.threads, "worker cap (falls back to ZETT_THREADS)");
  app.add_flag("--strict", s.strict, "drop rows whose entities are not context spans");

  // Shared option groups --------------------------------------------------
  const auto decode_opts = [&](CLI::App* sub) {
    s.bind(sub, "--beam", "decode.beam_size", "beam size");
    s.bind(sub, "--max-candidates", "decode.max_candidates_per_relation", "candidates kept per relation");
    s.bind(sub, "--max-output-len", "decode.max_output_len", "decode length cap");
    auto* greedy = s.bind_switch(sub, "--greedy", "decode.greedy", true, "argmax decoding (beam 1)");
    greedy->excludes(s.option_of("decode.beam_size"));
    s.bind_switch(sub, "--no-vocab-constraint", "decode.vocab_constraint", false,
                  "allow tokens outside the context");
  };
  const auto filter_opts = [&](CLI::App* sub) {
    s.bind(sub, "--delta", "filter.delta", "relation filter threshold");
    s.bind_switch(sub, "--no-fallback", "filter.fallback_top1", false, "empty pool instead of top-1");
    s.bind(sub, "--template-policy", "predict.template_policy", "first|max");
  };

  // split -----------------------------------------------------------------
  auto* split = app.add_subcommand("split", "deterministic relation folds");
  std::string split_rel, split_out;
  std::size_t split_m = 5, split_v = 5;
  split->add_option("--relations", split_rel, "relation registry JSON")->required();
  split->add_option("--m", split_m, "unseen test relations");
  split->add_option("--v", split_v, "validation relations");
  split->add_option("--out", split_out, "fold JSON (stdout when omitted)");

  // train -----------------------------------------------------------------
  auto* trainc = app.add_subcommand("train", "train the micro seq2seq model");
  std::string tr_data, tr_rel, tr_fold, tr_out, tr_vocab_out;
  std::vector<std::string> tr_vocab_data;
  trainc->add_option("--data", tr_data, "training JSONL")->required();
  trainc->add_option("--relations", tr_rel, "relation registry (default: relations.json beside --data)");
  trainc->add_option("--fold", tr_fold, "fold JSON; training keeps rows of train relations only");
  trainc->add_option("--out", tr_out, "checkpoint path")->required();
  trainc->add_option("--vocab-out", tr_vocab_out, "vocabulary path (default: <out>.vocab.json)");
  trainc->add_option("--vocab-data", tr_vocab_data, "extra JSONL whose contexts join the vocabulary (labels unused)");
  s.bind(trainc, "--epochs", "train.epochs", "epochs");
  s.bind(trainc, "--max-steps", "train.max_steps", "exact update count (overrides epochs)");
  s.bind(trainc, "--lr", "train.learning_rate", "peak learning rate");
  s.bind(trainc, "--batch-size", "train.batch_size", "batch size");
  s.bind(trainc, "--warmup-ratio", "train.warmup_ratio", "warmup share of steps");
  s.bind(trainc, "--d-model", "model.d_model", "model width");
  s.bind(trainc, "--heads", "model.heads", "attention heads");
  s.bind(trainc, "--ffn-dim", "model.ffn_dim", "feed-forward width");
  s.bind(trainc, "--dropout", "model.dropout", "dropout rate");
  s.bind(trainc, "--min-count", "vocab.min_count", "vocabulary frequency cut");

  // extract ---------------------------------------------------------------
  auto* extract = app.add_subcommand("extract", "rank triplets for each context");
  std::string ex_ckpt, ex_vocab, ex_fold, ex_data, ex_rel, ex_out, ex_emb, ex_pool = "test";
  extract->add_option("--ckpt", ex_ckpt, "checkpoint")->required();
  extract->add_option("--vocab", ex_vocab, "vocabulary (default: <ckpt>.vocab.json)");
  extract->add_option("--fold", ex_fold, "fold JSON selecting the candidate relations");
  extract->add_option("--pool", ex_pool, "fold part used as candidates: test|validation|train|all");
  extract->add_option("--data", ex_data, "input JSONL")->required();
  extract->add_option("--relations", ex_rel, "relation registry");
  extract->add_option("--embeddings", ex_emb, "precomputed embedding JSON");
  extract->add_option("--out", ex_out, "prediction JSONL (stdout when omitted)");
  s.bind(extract, "--mode", "predict.mode", "single|multi");
  s.bind(extract, "--threshold", "predict.multi_threshold", "multi-triplet score cut");
  decode_opts(extract);
  filter_opts(extract);

  // eval ------------------------------------------------------------------
  auto* evalc = app.add_subcommand("eval", "score predictions against gold");
  std::string ev_data, ev_rel, ev_pred, ev_out, ev_ckpt, ev_vocab, ev_fold, ev_mode = "single", ev_pool = "test";
  bool ev_macro = false;
  evalc->add_option("--data", ev_data, "gold JSONL")->required();
  evalc->add_option("--relations", ev_rel, "relation registry");
  evalc->add_option("--pred", ev_pred, "prediction JSONL (single/multi)");
  evalc->add_option("--fold", ev_fold, "fold JSON; score only rows whose relations all lie in --pool");
  evalc->add_option("--pool", ev_pool, "fold part scored: test|validation|train|all");
  evalc->add_option("--metric", ev_mode, "single|multi|entity");
  evalc->add_option("--ckpt", ev_ckpt, "checkpoint (entity mode)");
  evalc->add_option("--vocab", ev_vocab, "vocabulary (entity mode)");
  evalc->add_flag("--macro", ev_macro, "per-relation macro average for multi");
  evalc->add_option("--out", ev_out, "metric JSON (stdout when omitted)");
  decode_opts(evalc);

  // calibrate -------------------------------------------------------------
  auto* calib = app.add_subcommand("calibrate", "pick delta or the multi-triplet threshold on validation data");
  calib->require_subcommand(1);
  std::string ca_ckpt, ca_vocab, ca_fold, ca_data, ca_rel, ca_out, ca_emb, ca_grid, ca_pool = "validation";
  const auto calib_opts = [&](CLI::App* sub) {
    sub->add_option("--ckpt", ca_ckpt, "checkpoint")->required();
    sub->add_option("--vocab", ca_vocab, "vocabulary");
    sub->add_option("--fold", ca_fold, "fold JSON");
    sub->add_option("--pool", ca_pool, "fold part used as candidates (default validation)");
    sub->add_option("--data", ca_data, "validation JSONL")->required();
    sub->add_option("--relations", ca_rel, "relation registry");
    sub->add_option("--embeddings", ca_emb, "precomputed embedding JSON");
    sub->add_option("--grid", ca_grid, "comma-separated values");
    sub->add_option("--out", ca_out, "result JSON (stdout when omitted)");
    decode_opts(sub);
  };
  auto* calib_delta = calib->add_subcommand("delta", "relation filter threshold");
  calib_opts(calib_delta);
  s.bind_switch(calib_delta, "--no-fallback", "filter.fallback_top1", false, "empty pool instead of top-1");
  auto* calib_multi = calib->add_subcommand("multi-threshold", "multi-triplet score threshold");
  calib_opts(calib_multi);
  filter_opts(calib_multi);

  // ablate ----------------------------------------------------------------
  auto* ablate = app.add_subcommand("ablate", "full configuration against single-setting ablations");
  std::string ab_ckpt, ab_vocab, ab_fold, ab_data, ab_rel, ab_out, ab_emb, ab_pool = "test";
  bool ab_novocab = false, ab_greedy = false, ab_nofilter = false;
  ablate->add_option("--ckpt", ab_ckpt, "checkpoint")->required();
  ablate->add_option("--vocab", ab_vocab, "vocabulary");
  ablate->add_option("--fold", ab_fold, "fold JSON");
  ablate->add_option("--pool", ab_pool, "fold part used as candidates");
  ablate->add_option("--data", ab_data, "evaluation JSONL (single-triplet rows are used)")->required();
  ablate->add_option("--relations", ab_rel, "relation registry");
  ablate->add_option("--embeddings", ab_emb, "precomputed embedding JSON");
  ablate->add_option("--out", ab_out, "table JSON (stdout when omitted)");
  ablate->add_flag("--no-vocab-constraint", ab_novocab, "run only this ablation next to full");
  ablate->add_flag("--greedy", ab_greedy, "run only this ablation next to full");
  ablate->add_flag("--no-filter", ab_nofilter, "run only this ablation next to full");
  s.bind(ablate, "--beam", "decode.beam_size", "beam size");
  filter_opts(ablate);

  // templates -------------------------------------------------------------
  auto* tpl = app.add_subcommand("templates", "template mining, paraphrase selection, auto-generation");
  tpl->require_subcommand(1);
  auto* mine = tpl->add_subcommand("mine", "middle-word rule");
  std::string tm_data, tm_rel, tm_relation, tm_out;
  std::size_t tm_k = 5;
  mine->add_option("--data", tm_data, "corpus JSONL")->required();
  mine->add_option("--relations", tm_rel, "relation registry");
  mine->add_option("--relation", tm_relation, "relation id (default: every relation)");
  mine->add_option("--k", tm_k, "patterns kept per relation");
  mine->add_option("--out", tm_out, "template map JSON (stdout when omitted)");
  auto* para = tpl->add_subcommand("paraphrase-select", "pick one paraphrase per relation");
  std::string tp_cand, tp_rel, tp_policy = "top1", tp_out;
  std::size_t tp_n = 49;
  para->add_option("--candidates", tp_cand, "template map with paraphrase candidates");
  para->add_option("--relations", tp_rel, "registry; candidates come from the built-in rule paraphraser");
  para->add_option("--n", tp_n, "paraphrases generated per relation (rule paraphraser)");
  para->add_option("--policy", tp_policy, "top1|random")->check(CLI::IsMember({"top1", "random"}));
  para->add_option("--out", tp_out, "template map JSON (stdout when omitted)");
  auto* autogen = tpl->add_subcommand("autogen", "span-infilling template generation");
  std::string ta_ckpt, ta_vocab, ta_data, ta_rel, ta_relation, ta_out;
  AutogenConfig ta_cfg;
  std::size_t ta_n = 32;
  autogen->add_option("--ckpt", ta_ckpt, "checkpoint")->required();
  autogen->add_option("--vocab", ta_vocab, "vocabulary");
  autogen->add_option("--data", ta_data, "labeled JSONL")->required();
  autogen->add_option("--relations", ta_rel, "relation registry");
  autogen->add_option("--relation", ta_relation, "relation id (default: every relation in the data)");
  autogen->add_option("--n", ta_n, "labeled examples per relation");
  autogen->add_option("--beam", ta_cfg.beam_size, "beam size");
  autogen->add_option("--k", ta_cfg.top_k, "patterns kept per relation");
  autogen->add_option("--out", ta_out, "template map JSON (stdout when omitted)");

  // humaneval -------------------------------------------------------------
  auto* he = app.add_subcommand("humaneval", "annotation export, agreement, rescoring");
  he->require_subcommand(1);
  auto* he_export = he->add_subcommand("export", "sample contexts for annotation");
  std::string he_pred, he_out, he_ann, he_data, he_rel;
  std::size_t he_k = 5, he_n = 200;
  he_export->add_option("--pred", he_pred, "prediction JSONL")->required();
  he_export->add_option("--k", he_k, "predictions per context");
  he_export->add_option("--n", he_n, "sampled contexts");
  he_export->add_option("--out", he_out, "annotation CSV")->required();
  auto* he_kappa = he->add_subcommand("kappa", "Cohen's kappa between the two annotators");
  he_kappa->add_option("--annotations", he_ann, "annotation CSV")->required();
  auto* he_rescore = he->add_subcommand("rescore", "accuracy with annotator-approved predictions");
  he_rescore->add_option("--annotations", he_ann, "annotation CSV")->required();
  he_rescore->add_option("--pred", he_pred, "prediction JSONL")->required();
  he_rescore->add_option("--data", he_data, "gold JSONL")->required();
  he_rescore->add_option("--relations", he_rel, "relation registry");

  // synthetic -------------------------------------------------------------
  auto* syn = app.add_subcommand("synthetic", "synthetic zero-shot corpus");
  syn->require_subcommand(1);
  auto* syn_gen = syn->add_subcommand("generate", "write data.jsonl and relations.json");
  SyntheticConfig sy_cfg;
  std::string sy_dir;
  syn_gen->add_option("--out-dir", sy_dir, "output directory")->required();
  syn_gen->add_option("--relations-count", sy_cfg.num_relations, "number of relations");
  syn_gen->add_option("--n-per-relation", sy_cfg.n_per_relation, "single rows per relation");
  syn_gen->add_option("--multi-fraction", sy_cfg.multi_fraction, "share of two-triplet rows");
  syn_gen->add_option("--noise", sy_cfg.noise_fraction, "share of mislabeled single rows");
  auto* syn_bench = syn->add_subcommand("benchmark", "train and evaluate over several folds");
  BenchmarkConfig sb_cfg;
  std::string sb_seeds = "0,1,2,3,4", sb_out;
  bool sb_no_ablations = false;
  syn_bench->add_option("--seeds", sb_seeds, "comma-separated fold seeds");
  syn_bench->add_option("--m", sb_cfg.m, "unseen relations");
  syn_bench->add_option("--v", sb_cfg.v, "validation relations");
  syn_bench->add_option("--n-per-relation", sb_cfg.data.n_per_relation, "single rows per relation");
  syn_bench->add_option("--relations-count", sb_cfg.data.num_relations, "number of relations");
  syn_bench->add_option("--epochs", sb_cfg.train.epochs, "training epochs");
  syn_bench->add_option("--embed-dim", sb_cfg.embed_dim, "relation-filter embedder width");
  syn_bench->add_flag("--no-ablations", sb_no_ablations, "skip the ablation table");
  syn_bench->add_option("--out", sb_out, "report JSON (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    s.resolve();
    const unsigned threads = resolve_threads(s.cfg.threads);

    if (split->parsed()) {
      const auto reg = RelationRegistry::load(s.input(split_rel));
      const auto fold = split_folds(reg.ids(), split_m, split_v, s.cfg.seed);
      emit(split_out, fold.to_json().dump(2) + "\n");
      s.finish("split", split, parent_dir(split_out));
    } else if (trainc->parsed()) {
      auto reg = RelationRegistry::load(s.input(relations_path(tr_rel, tr_data)));
      Dataset ds = s.dataset(tr_data, reg);
      if (!tr_fold.empty()) {
        const auto fold = FoldSpec::load(s.input(tr_fold));
        ds = project_strict(ds, std::set<std::string>(fold.train.begin(), fold.train.end()));
      }
      if (ds.empty()) throw DataError("no training rows");
      Dataset vocab_src = ds;
      for (const auto& path : tr_vocab_data) {
        const Dataset extra = s.dataset(path, reg);
        vocab_src.examples.insert(vocab_src.examples.end(), extra.examples.begin(), extra.examples.end());
      }
      const Vocabulary vocab = dataset_vocab(vocab_src, s.cfg.min_count);
      ModelConfig mc = s.cfg.model;
      mc.vocab_size = static_cast<int>(vocab.size());
      Seq2SeqModel<float> model(mc);
      model.init_random(s.cfg.seed);
      const auto pairs = make_train_pairs(ds, vocab, static_cast<std::size_t>(mc.max_input_len),
                                          s.cfg.all_templates);
      const auto res = train(model, pairs, s.cfg.train, threads, [](std::size_t step, double loss) {
        if (step % 50 == 0) std::cerr << "step " << step << " loss " << loss << "\n";
      });
      save_checkpoint(tr_out, model, {vocab.hash(), res.steps, s.cfg.seed});
      vocab.save(tr_vocab_out.empty() ? default_vocab_path(tr_out) : tr_vocab_out);
      std::cerr << "trained " << res.steps << " steps on " << pairs.size() << " pairs, final loss "
                << (res.loss_curve.empty() ? 0.0 : res.loss_curve.back()) << "\n";
      s.finish("train", trainc, parent_dir(tr_out));
    } else if (extract->parsed()) {
      const auto lm = load_model(s, ex_ckpt, ex_vocab);
      const auto reg = RelationRegistry::load(s.input(relations_path(ex_rel, ex_data)));
      const Dataset ds = s.dataset(ex_data, reg);
      const auto pool = pool_of(reg, ex_fold, ex_pool, s);
      const Seq2SeqBackend<float> backend(lm.model);
      const auto embedder = make_embedder(s, ex_emb);
      const Extractor ex(backend, lm.vocab, *embedder);
      const auto pc = s.cfg.prediction();
      emit(ex_out, serialize_predictions(finalize(predict_dataset(ex, ds, pool, pc), pc)));
      s.finish("extract", extract, parent_dir(ex_out));
    } else if (evalc->parsed()) {
      const auto reg = RelationRegistry::load(s.input(relations_path(ev_rel, ev_data)));
      Dataset gold = s.dataset(ev_data, reg);
      if (!ev_fold.empty()) {
        std::set<std::string> ids;
        for (const auto& r : pool_of(reg, ev_fold, ev_pool, s)) ids.insert(r.id);
        gold = project_strict(gold, ids);
      }
      json report;
      if (ev_mode == "entity") {
        if (ev_ckpt.empty()) throw UsageError("--metric entity requires --ckpt");
        const auto lm = load_model(s, ev_ckpt, ev_vocab);
        const Seq2SeqBackend<float> backend(lm.model);
        const HashedBowEmbedder embedder(s.cfg.embed_dim);
        const Extractor ex(backend, lm.vocab, embedder);
        report = {{"mode", "entity"}, {"accuracy", eval_entity(gold, ex, s.cfg.decode)}};
      } else {
        if (ev_pred.empty()) throw UsageError("--pred is required for single and multi metrics");
        const auto preds = load_predictions(s.input(ev_pred));
        if (ev_mode == "single") {
          report = {{"mode", "single"}, {"accuracy", eval_single(singles_of(gold), preds)}};
        } else if (ev_mode == "multi") {
          report = {{"mode", "multi"}, {"averaging", ev_macro ? "macro" : "micro"}};
          report.update(prf_json(eval_multi(gold, preds, ev_macro)));
        } else {
          throw UsageError("--metric must be single, multi or entity");
        }
      }
      emit(ev_out, report.dump(2) + "\n");
      s.finish("eval", evalc, parent_dir(ev_out));
    } else if (calib->parsed()) {
      const auto lm = load_model(s, ca_ckpt, ca_vocab);
      const auto reg = RelationRegistry::load(s.input(relations_path(ca_rel, ca_data)));
      const auto pool = pool_of(reg, ca_fold, ca_pool, s);
      const Dataset val = restrict_to(s.dataset(ca_data, reg), pool);
      const Seq2SeqBackend<float> backend(lm.model);
      const auto embedder = make_embedder(s, ca_emb);
      const Extractor ex(backend, lm.vocab, *embedder);
      auto pc = s.cfg.prediction();
      pc.mode = PredictionMode::Single;
      CalibrationResult r;
      std::string what;
      if (calib_delta->parsed()) {
        what = "delta";
        std::vector<double> grid;
        if (ca_grid.empty())
          for (int i = 0; i <= 20; ++i) grid.push_back(i * 0.05);
        else
          grid = parse_grid(ca_grid);
        r = calibrate_delta(ex, val, pool, grid, pc);
      } else {
        what = "multi_threshold";
        r = calibrate_multi_threshold(ex, val, pool,
                                      ca_grid.empty() ? default_threshold_grid() : parse_grid(ca_grid), pc);
      }
      emit(ca_out, json{{"parameter", what}, {"best", r.best}, {"grid", r.grid}, {"metric", r.metric}}.dump(2) + "\n");
      s.finish(calib_delta->parsed() ? "calibrate delta" : "calibrate multi-threshold",
               calib_delta->parsed() ? calib_delta : calib_multi, parent_dir(ca_out));
    } else if (ablate->parsed()) {
      const auto lm = load_model(s, ab_ckpt, ab_vocab);
      const auto reg = RelationRegistry::load(s.input(relations_path(ab_rel, ab_data)));
      const auto pool = pool_of(reg, ab_fold, ab_pool, s);
      const Dataset gold = singles_of(restrict_to(s.dataset(ab_data, reg), pool));
      const Seq2SeqBackend<float> backend(lm.model);
      const auto embedder = make_embedder(s, ab_emb);
      const Extractor ex(backend, lm.vocab, *embedder);
      std::vector<std::string> names = {"full"};
      if (ab_novocab) names.push_back("no-vocab-constraint");
      if (ab_greedy) names.push_back("greedy");
      if (ab_nofilter) names.push_back("no-filter");
      if (names.size() == 1) names = {kAblationNames[0], kAblationNames[1], kAblationNames[2], kAblationNames[3]};
      auto pc = s.cfg.prediction();
      pc.mode = PredictionMode::Single;
      const auto rows = run_ablations(ex, gold, pool, pc, names);
      emit(ab_out, ablation_table_json(rows).dump(2) + "\n");
      s.finish("ablate", ablate, parent_dir(ab_out));
    } else if (tpl->parsed()) {
      if (mine->parsed()) {
        const auto reg = RelationRegistry::load(s.input(relations_path(tm_rel, tm_data)));
        const Dataset ds = s.dataset(tm_data, reg);
        std::map<std::string, std::vector<std::string>> out;
        json details = json::object();
        for (const auto& id : tm_relation.empty() ? reg.ids() : std::vector<std::string>{tm_relation}) {
          const auto r = mine_templates(ds, id, tm_k);
          if (!r.skipped.empty())
            std::cerr << "warning: " << r.skipped.size() << " example(s) of " << id
                      << " skipped (entity not found)\n";
          for (const auto& c : r.candidates) out[id].push_back(c.pattern);
          details[id] = candidates_json(r.candidates);
        }
        emit(tm_out, template_map_json(out).dump(2) + "\n");
        std::cerr << details.dump(2) << "\n";
        s.finish("templates mine", mine, parent_dir(tm_out));
      } else if (para->parsed()) {
        std::map<std::string, std::vector<std::string>> cands;
        if (!tp_cand.empty()) {
          cands = load_template_map(s.input(tp_cand));
        } else if (!tp_rel.empty()) {
          const RuleParaphraser p;
          for (const auto& r : RelationRegistry::load(s.input(tp_rel)).specs())
            cands[r.id] = p.paraphrase(r.templates.front(), tp_n);
        } else {
          throw UsageError("paraphrase-select needs --candidates or --relations");
        }
        std::map<std::string, std::vector<std::string>> out;
        const auto policy = tp_policy == "random" ? ParaphrasePolicy::Random : ParaphrasePolicy::Top1;
        for (const auto& [id, list] : cands) out[id] = {select_paraphrase(list, policy, s.cfg.seed)};
        emit(tp_out, template_map_json(out).dump(2) + "\n");
        s.finish("templates paraphrase-select", para, parent_dir(tp_out));
      } else {
        const auto lm = load_model(s, ta_ckpt, ta_vocab);
        const auto reg = RelationRegistry::load(s.input(relations_path(ta_rel, ta_data)));
        const Dataset ds = s.dataset(ta_data, reg);
        const Seq2SeqBackend<float> backend(lm.model);
        ta_cfg.threads = threads;
        std::set<std::string> rels;
        if (!ta_relation.empty()) {
          rels.insert(ta_relation);
        } else {
          for (const auto& e : ds.examples)
            for (const auto& t : e.triplets) rels.insert(t.relation);
        }
        std::map<std::string, std::vector<std::string>> out;
        json details = json::object();
        for (const auto& id : rels) {
          Dataset labeled;
          labeled.relations = ds.relations;
          for (const auto& e : ds.examples) {
            if (labeled.size() >= ta_n) break;
            if (std::any_of(e.triplets.begin(), e.triplets.end(), [&](const Triplet& t) { return t.relation == id; }))
              labeled.examples.push_back(e);
          }
          const auto c = autogen_templates(backend, lm.vocab, labeled, id, ta_cfg);
          for (const auto& x : c) out[id].push_back(x.pattern);
          details[id] = candidates_json(c);
        }
        emit(ta_out, template_map_json(out).dump(2) + "\n");
        std::cerr << details.dump(2) << "\n";
        s.finish("templates autogen", autogen, parent_dir(ta_out));
      }
    } else if (he->parsed()) {
      if (he_export->parsed()) {
        const auto ex = export_human_eval(load_predictions(s.input(he_pred)), he_k, he_n, s.cfg.seed);
        for (const auto& id : ex.short_contexts)
          std::cerr << "warning: context " << id << " has fewer than " << he_k << " predictions\n";
        save_annotations(ex.records, he_out);
        s.finish("humaneval export", he_export, parent_dir(he_out));
      } else if (he_kappa->parsed()) {
        const double k = cohen_kappa(load_annotations(s.input(he_ann)));
        std::cout << json{{"kappa", k}}.dump(2) << "\n";
        s.finish("humaneval kappa", he_kappa, ".");
      } else {
        const auto reg = RelationRegistry::load(s.input(relations_path(he_rel, he_data)));
        const auto r = rescore_with_annotations(s.dataset(he_data, reg), load_predictions(s.input(he_pred)),
                                                load_annotations(s.input(he_ann)));
        if (r.unlabeled)
          std::cerr << "warning: " << r.unlabeled << " record(s) without both labels were ignored\n";
        std::cout << json{{"contexts", r.contexts}, {"original_accuracy", r.original},
                          {"corrected_accuracy", r.corrected}, {"unlabeled", r.unlabeled}}
                         .dump(2)
                  << "\n";
        s.finish("humaneval rescore", he_rescore, ".");
      }
    } else if (syn->parsed()) {
      if (syn_gen->parsed()) {
        sy_cfg.seed = s.cfg.seed;
        const auto g = make_grammar(sy_cfg.num_relations, sy_cfg.seed);
        const Dataset ds = generate(g, sy_cfg);
        fs::create_directories(sy_dir);
        save_dataset(ds, (fs::path(sy_dir) / "data.jsonl").string());
        ds.relations.save((fs::path(sy_dir) / "relations.json").string());
        s.finish("synthetic generate", syn_gen, sy_dir);
      } else {
        sb_cfg.seeds.clear();
        for (double x : parse_grid(sb_seeds)) sb_cfg.seeds.push_back(static_cast<std::uint64_t>(x));
        sb_cfg.data.seed = s.cfg.seed;
        sb_cfg.ablations = !sb_no_ablations;
        sb_cfg.threads = threads;
        const auto r = run_benchmark(sb_cfg, [](const SeedResult& x) {
          std::cerr << "seed " << x.seed << ": seen " << x.seen_accuracy << ", unseen " << x.unseen_accuracy
                    << " (baseline " << x.majority_baseline << "), entity " << x.entity_accuracy << ", "
                    << x.seconds << " s\n";
        });
        json j = r.to_json();
        j["config"] = sb_cfg.to_json();
        emit(sb_out, j.dump(2) + "\n");
        s.finish("synthetic benchmark", syn_bench, parent_dir(sb_out));
      }
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const TrainingDiverged& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
