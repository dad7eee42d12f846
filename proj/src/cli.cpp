/* Copyright 2026 The vaealign Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "vaealign/cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "vaealign/bpe.hpp"
#include "vaealign/checkpoint.hpp"
#include "vaealign/count_aligners.hpp"
#include "vaealign/errors.hpp"
#include "vaealign/eval.hpp"
#include "vaealign/neural_em.hpp"
#include "vaealign/synth.hpp"
#include "vaealign/vae_train.hpp"

namespace vaealign {

namespace fs = std::filesystem;

// ------------------------------------------------------------------ settings

const std::string& Settings::str(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing setting '" + key + "'");
  return it->second;
}

namespace {
template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError("setting '" + key + "': cannot parse '" + text + "'");
  }
  return value;
}
}  // namespace

std::size_t Settings::size(const std::string& key) const {
  return parse_number<std::size_t>(key, str(key));
}

std::uint64_t Settings::u64(const std::string& key) const {
  return parse_number<std::uint64_t>(key, str(key));
}

double Settings::real(const std::string& key) const {
  const std::string& text = str(key);
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("setting '" + key + "': cannot parse '" + text + "' as a number");
}

bool Settings::flag(const std::string& key) const {
  const std::string& v = str(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("setting '" + key + "': expected true/false, got '" + v + "'");
}

namespace {
std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t k = 0; k < parts.size(); ++k) out += (k ? sep : "") + parts[k];
  return out;
}
}  // namespace

std::map<std::string, std::string> read_settings_file(const fs::path& path,
                                                      const std::vector<std::string>& valid) {
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_file(path.string());
  } catch (const CLI::Error& e) {
    throw ConfigError("cannot read config file " + path.string() + ": " + e.what());
  }
  std::map<std::string, std::string> out;
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    const std::string key = item.fullname();
    if (std::find(valid.begin(), valid.end(), key) == valid.end()) {
      throw ConfigError("unknown key '" + key + "' in " + path.string() +
                        "; valid keys: " + join(valid, ", "));
    }
    out[key] = join(item.inputs, ",");
  }
  return out;
}

void write_settings_file(const fs::path& path, const Settings& settings) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  for (const auto& [key, value] : settings.values()) out << key << " = \"" << value << "\"\n";
}

// ---------------------------------------------------------------- run config

namespace {
constexpr std::array<std::pair<const char*, ModelFamily>, 6> kFamilies = {{
    {"ibm1-count", ModelFamily::kIbm1Count},
    {"hmm-count", ModelFamily::kHmmCount},
    {"ibm1-nn", ModelFamily::kIbm1Nn},
    {"hmm-nn", ModelFamily::kHmmNn},
    {"ibm1-vae", ModelFamily::kIbm1Vae},
    {"hmm-vae", ModelFamily::kHmmVae},
}};
}  // namespace

ModelFamily parse_family(const std::string& name) {
  for (const auto& [text, family] : kFamilies)
    if (name == text) return family;
  throw ConfigError("unknown family '" + name +
                    "'; expected ibm1-count, hmm-count, ibm1-nn, hmm-nn, ibm1-vae or hmm-vae");
}

const char* family_string(ModelFamily family) {
  for (const auto& [text, f] : kFamilies)
    if (f == family) return text;
  return "?";
}

bool RunConfig::is_vae() const {
  return family == ModelFamily::kIbm1Vae || family == ModelFamily::kHmmVae;
}
bool RunConfig::is_neural() const {
  return family == ModelFamily::kIbm1Nn || family == ModelFamily::kHmmNn;
}
bool RunConfig::is_hmm() const {
  return family == ModelFamily::kHmmCount || family == ModelFamily::kHmmNn ||
         family == ModelFamily::kHmmVae;
}

namespace {
AlignFamily parse_align_family(const std::string& key, const std::string& v) {
  if (v == "ibm1") return AlignFamily::kIbm1;
  if (v == "hmm") return AlignFamily::kHmm;
  throw ConfigError("setting '" + key + "': expected ibm1 or hmm, got '" + v + "'");
}
}  // namespace

RunConfig make_run_config(const Settings& s) {
  RunConfig c;
  c.family = parse_family(s.str("family"));
  c.sp = s.flag("sp");
  c.ac = s.flag("ac");
  c.mono = s.flag("mono");
  c.noise = s.flag("noise");
  c.weights.reconstruction = s.real("alpha");
  c.weights.alignment = s.real("beta");
  c.weights.kl = s.real("gamma");
  c.weights.agreement = s.real("delta");
  c.weights.mono = s.real("mu");
  c.learning_rate = s.real("lr");
  c.batch_size = s.size("batch_size");
  c.epochs = s.size("epochs");
  c.m_steps = s.size("m_steps");
  c.max_len = s.size("max_len");
  c.seed = s.u64("seed");
  const std::string& direction = s.str("direction");
  if (direction != "forward" && direction != "reverse") {
    throw ConfigError("setting 'direction': expected forward or reverse, got '" + direction + "'");
  }
  c.reverse = direction == "reverse";
  c.encoder.embed_dim = s.size("embed_dim");
  c.encoder.hidden_dim = s.size("hidden_dim");
  c.encoder.latent_dim = s.size("latent_dim");
  c.encoder.layers = s.size("layers");
  c.nn_embed = s.size("nn_embed");
  c.nn_hidden = s.size("nn_hidden");
  c.noise_config.drop_probability = s.real("noise_drop");
  c.noise_config.max_shuffle = s.size("noise_shuffle");
  c.noise_family = parse_align_family("noise_family", s.str("noise_family"));
  c.kl_includes_dummy = s.flag("kl_dummy");
  c.mono_source = s.str("mono_source");
  c.mono_target = s.str("mono_target");

  for (double w : {c.weights.reconstruction, c.weights.alignment, c.weights.kl,
                   c.weights.agreement, c.weights.mono}) {
    if (!(w >= 0.0)) throw ConfigError("objective weights must be nonnegative");
  }
  if (!(c.learning_rate > 0.0)) throw ConfigError("lr must be positive");
  if (c.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (c.m_steps == 0) throw ConfigError("m_steps must be positive");
  if (c.noise_config.drop_probability < 0.0 || c.noise_config.drop_probability >= 1.0) {
    throw ConfigError("noise_drop must be in [0, 1)");
  }
  const bool any_flag = c.sp || c.ac || c.mono || c.noise;
  if (!c.is_vae() && any_flag) {
    throw ConfigError("+sp/+ac/+mono/+noise apply to the VAE families only");
  }
  if (c.ac && !c.sp) throw ConfigError("+ac requires +sp");
  if (c.sp && c.reverse) {
    throw ConfigError("+sp models hold both directions; direction must stay 'forward'");
  }
  const bool has_mono = !c.mono_source.empty() || !c.mono_target.empty();
  if (c.mono && !has_mono) throw ConfigError("+mono requires mono_source and/or mono_target");
  if (has_mono && !c.mono) throw ConfigError("monolingual files given without +mono");
  if (c.noise && !c.mono) throw ConfigError("+noise requires +mono data");
  if (!c.sp && !c.mono_source.empty()) {
    throw ConfigError("mono_source needs a two-direction (+sp) model");
  }
  return c;
}

// ---------------------------------------------------------------- manifests

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256: digest initialisation failed");
  }
  std::array<char, 1 << 16> buffer{};
  while (in) {
    in.read(buffer.data(), buffer.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buffer.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &length);
  std::ostringstream hex;
  for (unsigned int k = 0; k < length; ++k) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[k]);
  }
  return hex.str();
}

namespace {

struct Manifest {
  std::string command;
  Settings settings;
  std::vector<std::pair<std::string, fs::path>> inputs;  // role, path
  std::vector<std::string> outputs;                      // names under out_dir
};

void write_manifest(const fs::path& out_dir, const Manifest& m) {
  nlohmann::json j;
  j["tool"] = "vaealign";
  j["manifest_version"] = 1;
  j["command"] = m.command;
  j["config"] = m.settings.values();
  if (m.settings.has("seed")) j["seed"] = m.settings.u64("seed");
  j["inputs"] = nlohmann::json::object();
  for (const auto& [role, path] : m.inputs) {
    j["inputs"][role] = {{"path", path.generic_string()}, {"sha256", sha256_file(path)}};
  }
  j["outputs"] = nlohmann::json::object();
  for (const auto& name : m.outputs) j["outputs"][name] = sha256_file(out_dir / name);
  std::ofstream out(out_dir / "manifest.json", std::ios::binary);
  if (!out) throw FormatError("cannot write manifest in " + out_dir.string());
  out << j.dump(2) << '\n';
}

// ----------------------------------------------------------- command table

struct KeySpec {
  const char* name;
  const char* fallback;  // nullptr: required
  const char* help;
};

struct CommandSpec {
  const char* name;
  const char* help;
  std::vector<KeySpec> keys;
};

const char* default_out_dir() {
  const char* env = std::getenv("VAEALIGN_OUT_DIR");
  return env != nullptr && *env != '\0' ? env : "out";
}

std::vector<CommandSpec> command_specs() {
  const KeySpec out_dir{"out_dir", default_out_dir(), "directory receiving every output"};
  const KeySpec threads{"threads", "0", "OpenMP threads for the parallel stages (0 = default)"};
  return {
      {"synth",
       "generate a dictionary corpus with gold alignments",
       {out_dir, threads,
        {"vocab_size", "50", "words per language"},
        {"pairs", "2000", "sentence pairs"},
        {"min_length", "3", "shortest sentence"},
        {"max_length", "10", "longest sentence"},
        {"max_displacement", "2", "largest reordering distance"},
        {"mono_sentences", "0", "monolingual sentences per language"},
        {"seed", "1", "random seed"}}},
      {"bpe-train",
       "learn BPE merges",
       {out_dir, threads,
        {"input", nullptr, "comma-separated training text files"},
        {"merges", "32000", "number of merge operations"},
        {"marker", "@@", "continuation marker"},
        {"lowercase", "false", "lowercase the input"},
        {"output", "bpe.codes", "merge file name"}}},
      {"bpe-apply",
       "segment text with learned merges",
       {out_dir, threads,
        {"codes", nullptr, "merge file"},
        {"input", nullptr, "text file to segment"},
        {"lowercase", "false", "lowercase the input"},
        {"output", "", "output file name (default: <input stem>.bpe<ext>)"}}},
      {"train",
       "train an aligner",
       {out_dir, threads,
        {"source", nullptr, "source text (f), one sentence per line"},
        {"target", nullptr, "target text (e)"},
        {"family", "ibm1-count", "ibm1-count|hmm-count|ibm1-nn|hmm-nn|ibm1-vae|hmm-vae"},
        {"sp", "false", "+SP: two directions with shared decoders"},
        {"ac", "false", "+AC: agreement costs (needs +sp)"},
        {"mono", "false", "+Mono: monolingual batches"},
        {"noise", "false", "+Noise on monolingual batches"},
        {"mono_source", "", "monolingual source text"},
        {"mono_target", "", "monolingual target text"},
        {"alpha", "10", "reconstruction weight"},
        {"beta", "50", "alignment weight"},
        {"gamma", "0.5", "KL weight"},
        {"delta", "1", "agreement weight"},
        {"mu", "1", "monolingual weight"},
        {"lr", "0.001", "Adam learning rate"},
        {"batch_size", "100", "sentences per batch"},
        {"epochs", "10", "epochs or EM iterations"},
        {"m_steps", "1", "Adam steps per batch in neural EM"},
        {"max_len", "50", "keep pairs with both sides shorter (0 keeps all)"},
        {"seed", "1", "random seed"},
        {"direction", "forward", "forward aligns source words to target; reverse the opposite"},
        {"embed_dim", "128", "VAE embedding size"},
        {"hidden_dim", "64", "VAE LSTM units per direction"},
        {"latent_dim", "64", "VAE latent size"},
        {"layers", "2", "VAE BiLSTM layers"},
        {"nn_embed", "128", "neural EM embedding size"},
        {"nn_hidden", "64", "neural EM hidden size"},
        {"noise_drop", "0.1", "word drop probability"},
        {"noise_shuffle", "3", "largest shuffle displacement"},
        {"noise_family", "ibm1", "alignment model of the noise objective"},
        {"kl_dummy", "true", "count the dummy latent in the KL term"},
        {"lowercase", "false", "lowercase the input"}}},
      {"align",
       "align a corpus with a trained model",
       {out_dir, threads,
        {"model", nullptr, "model directory written by train"},
        {"source", nullptr, "source text"},
        {"target", nullptr, "target text"},
        {"decode", "viterbi", "HMM decoding: viterbi|posterior"},
        {"direction", "forward", "direction of a two-direction model"},
        {"word_level", "false", "project subword links to words using the marker"},
        {"marker", "@@", "BPE continuation marker"},
        {"output", "alignment.txt", "alignment file name"}}},
      {"symmetrize",
       "combine two directional alignments",
       {out_dir, threads,
        {"forward", nullptr, "source-to-target alignment"},
        {"reverse", nullptr, "target-to-source alignment"},
        {"reverse_orientation", "source-target", "link order in the reverse file"},
        {"method", "gdf", "gdf|intersection|union"},
        {"source", "", "source text, for sentence lengths"},
        {"target", "", "target text, for sentence lengths"},
        {"output", "symmetrized.txt", "output file name"}}},
      {"evaluate",
       "score alignments against a reference",
       {out_dir, threads,
        {"hypothesis", nullptr, "alignment to score"},
        {"reference", nullptr, "gold alignment (j-i sure, j?i possible)"},
        {"reverse", "", "second direction, for agreement statistics"},
        {"source", "", "source text, for sentence lengths"},
        {"target", "", "target text, for sentence lengths"},
        {"model", "", "VAE model directory, for reconstruction accuracy"},
        {"recon_text", "", "text (model tokenization) to reconstruct"}}},
  };
}

std::vector<std::string> key_names(const CommandSpec& spec) {
  std::vector<std::string> names;
  for (const auto& k : spec.keys) names.emplace_back(k.name);
  return names;
}

const CommandSpec& find_spec(const std::vector<CommandSpec>& specs, const std::string& name) {
  for (const auto& s : specs)
    if (name == s.name) return s;
  throw ConfigError("unknown command " + name);
}

Settings settings_for_file(const fs::path& path, const std::string& command) {
  const auto specs = command_specs();
  const CommandSpec& spec = find_spec(specs, command);
  std::map<std::string, std::string> values;
  for (const auto& k : spec.keys) values[k.name] = k.fallback ? k.fallback : "";
  for (auto& [key, value] : read_settings_file(path, key_names(spec))) values[key] = value;
  return Settings(std::move(values));
}

fs::path required_path(const Settings& s, const std::string& key) {
  const std::string& v = s.str(key);
  if (v.empty()) throw ConfigError("missing required setting '" + key + "'");
  return v;
}

fs::path prepare_out_dir(const Settings& s) {
  fs::path dir = s.str("out_dir");
  if (dir.empty()) throw ConfigError("out_dir must not be empty");
  fs::create_directories(dir);
  return dir;
}

std::vector<fs::path> split_paths(const std::string& list) {
  std::vector<fs::path> out;
  std::string item;
  std::istringstream in(list);
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.emplace_back(item);
  }
  return out;
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << content;
}

// 1-based word of each subword, from the continuation marker.
std::vector<std::size_t> word_spans(const TokenizedLine& tokens, const std::string& marker) {
  std::vector<std::size_t> spans;
  std::size_t word = 1;
  for (const auto& tok : tokens) {
    spans.push_back(word);
    const bool continues = tok.size() > marker.size() &&
                           tok.compare(tok.size() - marker.size(), marker.size(), marker) == 0;
    if (!continues) ++word;
  }
  return spans;
}

// ------------------------------------------------------------------ commands

int cmd_synth(const Settings& s, std::ostream& out) {
  SynthConfig cfg;
  cfg.vocab_size = s.size("vocab_size");
  cfg.pairs = s.size("pairs");
  cfg.min_length = s.size("min_length");
  cfg.max_length = s.size("max_length");
  cfg.max_displacement = s.size("max_displacement");
  cfg.mono_sentences = s.size("mono_sentences");
  cfg.seed = s.u64("seed");
  const fs::path dir = prepare_out_dir(s);
  write_synth_corpus(make_synth_corpus(cfg), dir);
  Manifest m{"synth", s, {}, {"src.txt", "tgt.txt", "gold.txt"}};
  if (cfg.mono_sentences > 0) {
    m.outputs.push_back("mono.src.txt");
    m.outputs.push_back("mono.tgt.txt");
  }
  write_manifest(dir, m);
  out << "wrote " << cfg.pairs << " pairs to " << dir.generic_string() << '\n';
  return kExitOk;
}

int cmd_bpe_train(const Settings& s, std::ostream& out) {
  const std::vector<fs::path> inputs = split_paths(s.str("input"));
  if (inputs.empty()) throw ConfigError("missing required setting 'input'");
  const bool lower = s.flag("lowercase");
  std::vector<std::string> lines;
  Manifest m{"bpe-train", s, {}, {s.str("output")}};
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (const auto& tokens : read_tokenized(inputs[k], lower)) lines.push_back(join(tokens, " "));
    m.inputs.emplace_back("input" + std::to_string(k + 1), inputs[k]);
  }
  const BpeModel model = bpe_train(lines, s.size("merges"), s.str("marker"));
  const fs::path dir = prepare_out_dir(s);
  save_bpe(dir / s.str("output"), model);
  write_manifest(dir, m);
  out << "learned " << model.merges.size() << " merges\n";
  return kExitOk;
}

int cmd_bpe_apply(const Settings& s, std::ostream& out) {
  const fs::path codes = required_path(s, "codes");
  const fs::path input = required_path(s, "input");
  const BpeModel model = load_bpe(codes);
  const BpeSegmenter segmenter(model);
  std::string name = s.str("output");
  if (name.empty()) name = input.stem().string() + ".bpe" + input.extension().string();
  std::ostringstream text;
  std::size_t count = 0;
  for (const auto& tokens : read_tokenized(input, s.flag("lowercase"))) {
    text << join(segmenter.apply(join(tokens, " ")).tokens, " ") << '\n';
    ++count;
  }
  const fs::path dir = prepare_out_dir(s);
  write_text(dir / name, text.str());
  write_manifest(dir, {"bpe-apply", s, {{"codes", codes}, {"input", input}}, {name}});
  out << "segmented " << count << " lines\n";
  return kExitOk;
}

struct LoadedText {
  std::vector<TokenizedLine> source, target;  // file orientation
};

LoadedText read_pair_text(const fs::path& src, const fs::path& tgt, bool lowercase) {
  LoadedText t{read_tokenized(src, lowercase), read_tokenized(tgt, lowercase)};
  if (t.source.size() != t.target.size()) {
    throw FormatError("source has " + std::to_string(t.source.size()) + " lines, target has " +
                      std::to_string(t.target.size()));
  }
  return t;
}

VaeConfig vae_config(const RunConfig& rc) {
  VaeConfig vc;
  vc.encoder = rc.encoder;
  vc.family = rc.family == ModelFamily::kHmmVae ? AlignFamily::kHmm : AlignFamily::kIbm1;
  vc.joint = rc.sp;
  vc.share_decoders = rc.sp;
  vc.kl_includes_dummy = rc.kl_includes_dummy;
  vc.noise_family = rc.noise_family;
  return vc;
}

NeuralEmConfig neural_config(const RunConfig& rc) {
  NeuralEmConfig nc;
  nc.embed_dim = rc.nn_embed;
  nc.hidden_dim = rc.nn_hidden;
  nc.adam.learning_rate = rc.learning_rate;
  nc.batch_size = rc.batch_size;
  nc.iterations = rc.epochs;
  nc.m_steps = rc.m_steps;
  nc.seed = rc.seed + 1;
  return nc;
}

// Parameters of a count model, packed for the checkpoint format.
ParameterSet count_parameters(const LexicalTable& table, const JumpDistribution* jumps) {
  ParameterSet p;
  p.add("t", table.to_tensor());
  if (jumps != nullptr) {
    p.add("jump", Tensor({1, kJumpCount},
                         std::vector<double>(jumps->probs.begin(), jumps->probs.end())));
  }
  return p;
}

int cmd_train(const Settings& s, std::ostream& out) {
  const RunConfig rc = make_run_config(s);
  const fs::path src_path = required_path(s, "source");
  const fs::path tgt_path = required_path(s, "target");
  const bool lower = s.flag("lowercase");
  LoadedText text = read_pair_text(src_path, tgt_path, lower);
  if (rc.reverse) std::swap(text.source, text.target);
  LoadOptions opts;
  if (rc.max_len > 0) opts.max_len = rc.max_len;
  opts.lowercase = lower;
  const ParallelCorpus corpus = make_corpus(text.source, text.target, opts);
  if (corpus.pairs.empty()) throw FormatError("no sentence pairs left after the max_len filter");

  const fs::path dir = prepare_out_dir(s);
  corpus.source_vocab.save(dir / "src.vocab");
  corpus.target_vocab.save(dir / "tgt.vocab");
  std::ostringstream log;
  ParameterSet saved;
  const ParameterSet* to_save = &saved;
  std::optional<VaeAligner> vae;
  std::optional<NeuralAligner> neural;
  log << std::setprecision(12);

  switch (rc.family) {
    case ModelFamily::kIbm1Count: {
      log << "iteration\tlog_likelihood\n";
      LexicalTable table = LexicalTable::uniform_over_support(corpus);
      for (std::size_t it = 1; it <= rc.epochs; ++it) {
        Ibm1EmResult r = ibm1_em_step(corpus, table);
        table = std::move(r.table);
        log << it << '\t' << r.log_likelihood << '\n';
      }
      saved = count_parameters(table, nullptr);
      break;
    }
    case ModelFamily::kHmmCount: {
      log << "iteration\tlog_likelihood\n";
      HmmParams params = init_hmm(corpus);
      for (std::size_t it = 1; it <= rc.epochs; ++it) {
        HmmEmResult r = hmm_em_step(corpus, params);
        params = std::move(r.params);
        log << it << '\t' << r.log_likelihood << '\n';
      }
      saved = count_parameters(params.emission, &params.jumps);
      break;
    }
    case ModelFamily::kIbm1Nn:
    case ModelFamily::kHmmNn: {
      const NeuralEmConfig nc = neural_config(rc);
      Rng rng(rc.seed);
      neural.emplace(rc.family == ModelFamily::kHmmNn ? AlignFamily::kHmm : AlignFamily::kIbm1,
                     corpus.source_vocab.size(), corpus.target_vocab.size(), nc, rng);
      log << "iteration\tlog_likelihood\n";
      for (const auto& row : neural_em_train(*neural, corpus, nc)) {
        log << row.iteration << '\t' << row.log_likelihood << '\n';
      }
      to_save = &neural->params();
      break;
    }
    case ModelFamily::kIbm1Vae:
    case ModelFamily::kHmmVae: {
      Rng rng(rc.seed);
      vae.emplace(vae_config(rc), corpus.source_vocab.size(), corpus.target_vocab.size(), rng);
      MonoCorpus mono;
      std::string mono_tgt = rc.mono_target, mono_src = rc.mono_source;
      if (rc.reverse) std::swap(mono_tgt, mono_src);
      if (!mono_tgt.empty()) {
        mono.target = encode_all(read_tokenized(mono_tgt, lower), corpus.target_vocab);
      }
      if (!mono_src.empty()) {
        mono.source = encode_all(read_tokenized(mono_src, lower), corpus.source_vocab);
      }
      VaeTrainConfig tc;
      tc.weights = rc.weights;
      tc.adam.learning_rate = rc.learning_rate;
      tc.batch_size = rc.batch_size;
      tc.epochs = rc.epochs;
      tc.agreement = rc.ac;
      tc.noise = rc.noise;
      tc.noise_config = rc.noise_config;
      tc.seed = rc.seed + 1;
      write_epoch_header(log);
      vae_train(*vae, corpus, mono, tc, [&](const EpochLog& row) { write_epoch_row(log, row); });
      to_save = &vae->params();
      break;
    }
  }
  save_checkpoint(dir / "checkpoint.bin", *to_save);
  write_text(dir / "train_log.tsv", log.str());
  Settings model_cfg(s.values());
  for (const char* key : {"out_dir", "threads"}) model_cfg.set(key, "");
  write_settings_file(dir / "model.cfg", model_cfg);
  Manifest m{"train", s, {{"source", src_path}, {"target", tgt_path}},
             {"checkpoint.bin", "model.cfg", "src.vocab", "tgt.vocab", "train_log.tsv"}};
  if (!rc.mono_source.empty()) m.inputs.emplace_back("mono_source", rc.mono_source);
  if (!rc.mono_target.empty()) m.inputs.emplace_back("mono_target", rc.mono_target);
  write_manifest(dir, m);
  out << "trained " << family_string(rc.family) << " on " << corpus.pairs.size() << " pairs\n";
  return kExitOk;
}

int cmd_align(const Settings& s, std::ostream& out) {
  const fs::path model_dir = required_path(s, "model");
  const fs::path src_path = required_path(s, "source");
  const fs::path tgt_path = required_path(s, "target");
  const Settings model_cfg = settings_for_file(model_dir / "model.cfg", "train");
  const RunConfig rc = make_run_config(model_cfg);
  const Vocabulary src_vocab = Vocabulary::load(model_dir / "src.vocab");
  const Vocabulary tgt_vocab = Vocabulary::load(model_dir / "tgt.vocab");
  const ParameterSet stored = load_checkpoint(model_dir / "checkpoint.bin");

  const LoadedText text = read_pair_text(src_path, tgt_path, model_cfg.flag("lowercase"));
  const ParallelCorpus corpus = rc.reverse ? make_corpus(text.target, text.source, src_vocab, tgt_vocab)
                                           : make_corpus(text.source, text.target, src_vocab, tgt_vocab);
  const std::string& decode = s.str("decode");
  if (decode != "viterbi" && decode != "posterior") {
    throw ConfigError("setting 'decode': expected viterbi or posterior");
  }
  const DecodeRule rule = decode == "viterbi" ? DecodeRule::kViterbi : DecodeRule::kPosterior;
  const std::string& direction = s.str("direction");
  if (direction != "forward" && direction != "reverse") {
    throw ConfigError("setting 'direction': expected forward or reverse");
  }
  if (direction == "reverse" && !rc.sp) {
    throw ConfigError("direction=reverse needs a two-direction (+sp) model; train a separate "
                      "model with direction = reverse instead");
  }

  std::vector<AlignmentSet> links;
  switch (rc.family) {
    case ModelFamily::kIbm1Count:
      links = decode_corpus_ibm1(LexicalTable::from_tensor(stored.value(stored.id("t")),
                                                           tgt_vocab.size()),
                                 corpus);
      break;
    case ModelFamily::kHmmCount: {
      HmmParams params;
      params.emission = LexicalTable::from_tensor(stored.value(stored.id("t")), tgt_vocab.size());
      const Tensor& jump = stored.value(stored.id("jump"));
      if (jump.size() != kJumpCount) throw FormatError("checkpoint jump table has wrong size");
      std::copy(jump.values().begin(), jump.values().end(), params.jumps.probs.begin());
      links = decode_corpus_hmm(params, corpus, rule);
      break;
    }
    case ModelFamily::kIbm1Nn:
    case ModelFamily::kHmmNn: {
      Rng rng(rc.seed);
      NeuralAligner model(rc.family == ModelFamily::kHmmNn ? AlignFamily::kHmm : AlignFamily::kIbm1,
                          src_vocab.size(), tgt_vocab.size(), neural_config(rc), rng);
      restore_parameters(model.params(), stored);
      links = neural_align_corpus(model, corpus, rule);
      break;
    }
    case ModelFamily::kIbm1Vae:
    case ModelFamily::kHmmVae: {
      Rng rng(rc.seed);
      VaeAligner model(vae_config(rc), src_vocab.size(), tgt_vocab.size(), rng);
      restore_parameters(model.params(), stored);
      links = vae_align_corpus(model, corpus,
                               direction == "reverse" ? Direction::kReverse : Direction::kForward);
      break;
    }
  }
  if (rc.reverse) {
    for (auto& a : links) a = a.transposed();
  }
  if (s.flag("word_level")) {
    const std::string& marker = s.str("marker");
    for (std::size_t k = 0; k < links.size(); ++k) {
      links[k] = project_alignment_to_words(links[k], word_spans(text.source[k], marker),
                                            word_spans(text.target[k], marker));
    }
  }
  const fs::path dir = prepare_out_dir(s);
  write_alignment(dir / s.str("output"), links);
  write_manifest(dir, {"align",
                       s,
                       {{"checkpoint", model_dir / "checkpoint.bin"},
                        {"source", src_path},
                        {"target", tgt_path}},
                       {s.str("output")}});
  out << "aligned " << links.size() << " pairs\n";
  return kExitOk;
}

std::vector<std::pair<std::size_t, std::size_t>> sentence_lengths(const Settings& s,
                                                                  std::size_t expected) {
  if (s.str("source").empty() && s.str("target").empty()) return {};
  const LoadedText text = read_pair_text(required_path(s, "source"), required_path(s, "target"),
                                         false);
  if (text.source.size() != expected) {
    throw FormatError("text files have " + std::to_string(text.source.size()) +
                      " lines, alignments have " + std::to_string(expected));
  }
  std::vector<std::pair<std::size_t, std::size_t>> lengths;
  for (std::size_t k = 0; k < expected; ++k) {
    lengths.emplace_back(text.source[k].size(), text.target[k].size());
  }
  return lengths;
}

int cmd_symmetrize(const Settings& s, std::ostream& out) {
  const fs::path fwd_path = required_path(s, "forward");
  const fs::path rev_path = required_path(s, "reverse");
  const std::vector<AlignmentSet> fwd = read_alignment(fwd_path);
  std::vector<AlignmentSet> rev = read_alignment(rev_path);
  if (fwd.size() != rev.size()) {
    throw FormatError("forward has " + std::to_string(fwd.size()) + " lines, reverse has " +
                      std::to_string(rev.size()));
  }
  const std::string& orientation = s.str("reverse_orientation");
  if (orientation == "target-source") {
    for (auto& a : rev) a = a.transposed();
  } else if (orientation != "source-target") {
    throw ConfigError("reverse_orientation must be source-target or target-source");
  }
  const std::string& method = s.str("method");
  if (method != "gdf" && method != "grow-diag-final" && method != "intersection" &&
      method != "union") {
    throw ConfigError("method must be gdf, intersection or union");
  }
  const auto lengths = sentence_lengths(s, fwd.size());
  std::vector<AlignmentSet> result;
  for (std::size_t k = 0; k < fwd.size(); ++k) {
    if (method == "intersection") {
      result.push_back(intersect(fwd[k], rev[k]));
    } else if (method == "union") {
      result.push_back(union_links(fwd[k], rev[k]));
    } else {
      const auto [j_len, i_len] = lengths.empty() ? std::pair<std::size_t, std::size_t>{0, 0}
                                                  : lengths[k];
      result.push_back(grow_diag_final(fwd[k], rev[k], j_len, i_len));
    }
  }
  const fs::path dir = prepare_out_dir(s);
  write_alignment(dir / s.str("output"), result);
  write_manifest(dir, {"symmetrize", s, {{"forward", fwd_path}, {"reverse", rev_path}},
                       {s.str("output")}});
  out << "symmetrized " << result.size() << " pairs with " << method << '\n';
  return kExitOk;
}

int cmd_evaluate(const Settings& s, std::ostream& out) {
  const fs::path hyp_path = required_path(s, "hypothesis");
  const fs::path ref_path = required_path(s, "reference");
  const std::vector<AlignmentSet> hyp = read_alignment(hyp_path);
  const std::vector<AlignmentSet> ref = read_alignment(ref_path);
  EvalReport report = evaluate(hyp, ref, sentence_lengths(s, hyp.size()));
  Manifest m{"evaluate", s, {{"hypothesis", hyp_path}, {"reference", ref_path}},
             {"report.tsv", "sentences.tsv"}};
  if (!s.str("reverse").empty()) {
    const fs::path rev_path = s.str("reverse");
    report.agreement = agreement_report(hyp, read_alignment(rev_path), ref);
    m.inputs.emplace_back("reverse", rev_path);
  }
  if (!s.str("model").empty()) {
    const fs::path model_dir = s.str("model");
    const Settings model_cfg = settings_for_file(model_dir / "model.cfg", "train");
    const RunConfig rc = make_run_config(model_cfg);
    if (!rc.is_vae()) throw ConfigError("reconstruction accuracy needs a VAE model");
    const fs::path text = required_path(s, "recon_text");
    Rng rng(rc.seed);
    const Vocabulary src_vocab = Vocabulary::load(model_dir / "src.vocab");
    const Vocabulary tgt_vocab = Vocabulary::load(model_dir / "tgt.vocab");
    VaeAligner model(vae_config(rc), src_vocab.size(), tgt_vocab.size(), rng);
    restore_parameters(model.params(), load_checkpoint(model_dir / "checkpoint.bin"));
    report.reconstruction_accuracy = reconstruction_accuracy(
        model, encode_all(read_tokenized(text, model_cfg.flag("lowercase")), tgt_vocab));
    m.inputs.emplace_back("checkpoint", model_dir / "checkpoint.bin");
    m.inputs.emplace_back("recon_text", text);
  }
  const fs::path dir = prepare_out_dir(s);
  std::ostringstream tsv, per_sentence;
  write_report(tsv, report);
  write_sentence_report(per_sentence, hyp, ref);
  write_text(dir / "report.tsv", tsv.str());
  write_text(dir / "sentences.tsv", per_sentence.str());
  write_manifest(dir, m);
  out << std::fixed << std::setprecision(4);
  out << "aer = " << report.aer << '\n'
      << "precision = " << report.prf.precision << '\n'
      << "recall = " << report.prf.recall << '\n'
      << "f_measure = " << report.prf.f << '\n'
      << "accuracy = " << report.null.accuracy << '\n';
  if (report.agreement) out << "intersection_aer = " << report.agreement->intersection_aer << '\n';
  if (report.reconstruction_accuracy) out << "r_acc = " << *report.reconstruction_accuracy << '\n';
  return kExitOk;
}

int dispatch(const std::string& command, const Settings& s, std::ostream& out) {
  set_thread_count(static_cast<int>(s.size("threads")));
  if (command == "synth") return cmd_synth(s, out);
  if (command == "bpe-train") return cmd_bpe_train(s, out);
  if (command == "bpe-apply") return cmd_bpe_apply(s, out);
  if (command == "train") return cmd_train(s, out);
  if (command == "align") return cmd_align(s, out);
  if (command == "symmetrize") return cmd_symmetrize(s, out);
  return cmd_evaluate(s, out);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const std::vector<CommandSpec> specs = command_specs();
  CLI::App app{"Unsupervised word alignment with count, neural and VAE aligners", "vaealign"};
  app.require_subcommand(1);
  std::map<std::string, std::map<std::string, std::string>> given;
  std::map<std::string, std::string> config_files;
  std::map<std::string, CLI::App*> subs;
  for (const auto& spec : specs) {
    CLI::App* sub = app.add_subcommand(spec.name, spec.help);
    sub->add_option("--config", config_files[spec.name], "\"key = value\" settings file");
    for (const auto& key : spec.keys) {
      std::string help = key.help;
      help += key.fallback ? std::string(" [") + key.fallback + "]" : " (required)";
      sub->add_option(std::string("--") + key.name, given[spec.name][key.name], help);
    }
    subs[spec.name] = sub;
  }

  std::vector<const char*> argv{"vaealign"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (dynamic_cast<const CLI::ExtrasError*>(&e) != nullptr) {
      for (const auto& spec : specs) {
        if (subs[spec.name]->parsed()) err << "valid keys: " << join(key_names(spec), ", ") << '\n';
      }
    }
    return code == 0 ? kExitOk : kExitUsage;
  }

  for (const auto& spec : specs) {
    CLI::App* sub = subs[spec.name];
    if (!sub->parsed()) continue;
    try {
      std::map<std::string, std::string> values;
      for (const auto& k : spec.keys) values[k.name] = k.fallback ? k.fallback : "";
      if (!config_files[spec.name].empty()) {
        for (auto& [key, value] : read_settings_file(config_files[spec.name], key_names(spec))) {
          values[key] = value;
        }
      }
      for (const auto& k : spec.keys) {
        if (sub->count(std::string("--") + k.name) > 0) values[k.name] = given[spec.name][k.name];
      }
      for (const auto& k : spec.keys) {
        if (k.fallback == nullptr && values[k.name].empty()) {
          throw ConfigError(std::string("missing required setting '") + k.name + "'");
        }
      }
      return dispatch(spec.name, Settings(std::move(values)), out);
    } catch (const ConfigError& e) {
      err << "vaealign " << spec.name << ": " << e.what() << '\n';
      return kExitUsage;
    } catch (const std::exception& e) {
      err << "vaealign " << spec.name << ": " << e.what() << '\n';
      return kExitData;
    }
  }
  return kExitUsage;
}

}  // namespace vaealign
