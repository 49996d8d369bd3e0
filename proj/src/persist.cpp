#include "vqr/persist.hpp"

#include <charconv>
#include <cstdio>
#include <map>

#include "vqr/error.hpp"
#include "vqr/io.hpp"

namespace vqr {

namespace {

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += io::exact(v[i]);
  }
  return s;
}

void put(std::string& out, double v) {
  out += ' ';
  out += io::digits17(v);
}

void put_tree(std::string& out, const RegressionTree& tree, const std::vector<std::vector<double>>* targets,
              std::uint64_t seed) {
  out += "tree " + std::to_string(tree.nodes.size());
  if (targets) out += ' ' + std::to_string(seed);
  out += '\n';
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& nd = tree.nodes[i];
    if (nd.is_leaf()) {
      out += "leaf";
      put(out, nd.value);
      if (targets) {
        const auto& t = (*targets)[i];
        out += ' ' + std::to_string(t.size());
        for (double v : t) put(out, v);
      }
    } else {
      out += "split " + std::to_string(nd.feature);
      put(out, nd.threshold);
      out += ' ' + std::to_string(nd.left) + ' ' + std::to_string(nd.right);
    }
    out += '\n';
  }
}

void put_row(std::string& out, std::string_view label, const std::vector<double>& v) {
  out += label;
  for (double x : v) put(out, x);
  out += '\n';
}

// Whitespace tokenizer that remembers byte offsets for error reports.
class Reader {
 public:
  Reader(std::string_view text, std::size_t pos) : text_(text), pos_(pos) {}

  std::string_view next(std::size_t* at = nullptr) {
    while (pos_ < text_.size() && is_space(text_[pos_])) ++pos_;
    if (pos_ >= text_.size()) throw CorruptModelError("unexpected end of model file", text_.size());
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !is_space(text_[pos_])) ++pos_;
    last_ = start;
    if (at) *at = start;
    return text_.substr(start, pos_ - start);
  }

  void expect(std::string_view word) {
    const auto tok = next();
    if (tok != word) fail("expected '" + std::string(word) + "', found '" + std::string(tok) + "'");
  }

  double number() {
    const auto tok = next();
    const auto v = io::parse_double(tok);
    if (!v) fail("bad number '" + std::string(tok) + "'");
    return *v;
  }

  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    const auto tok = next();
    const auto v = io::parse_int(tok);
    if (!v || *v < lo || *v > hi) fail("bad integer '" + std::string(tok) + "'");
    return *v;
  }

  std::size_t count(std::size_t hi = 100'000'000) {
    return static_cast<std::size_t>(integer(0, static_cast<std::int64_t>(hi)));
  }

  std::uint64_t unsigned64() {
    const auto tok = next();
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size()) fail("bad unsigned integer '" + std::string(tok) + "'");
    return v;
  }

  std::vector<double> numbers(std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = number();
    return v;
  }

  bool at_end() {
    while (pos_ < text_.size() && is_space(text_[pos_])) ++pos_;
    return pos_ >= text_.size();
  }

  [[noreturn]] void fail(const std::string& what) const { throw CorruptModelError(what, last_); }

 private:
  static bool is_space(char c) { return c == ' ' || c == '\n' || c == '\t' || c == '\r'; }

  std::string_view text_;
  std::size_t pos_;
  std::size_t last_ = 0;
};

RegressionTree read_tree(Reader& r, std::vector<std::vector<double>>* targets, std::uint64_t* seed,
                         std::size_t n_features) {
  r.expect("tree");
  const std::size_t n = r.count();
  if (n == 0) r.fail("tree without nodes");
  if (seed) *seed = r.unsigned64();
  RegressionTree tree;
  tree.nodes.resize(n);
  if (targets) targets->assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    auto& nd = tree.nodes[i];
    const auto kind = r.next();
    if (kind == "leaf") {
      nd.value = r.number();
      if (targets) {
        const std::size_t k = r.count();
        if (k == 0) r.fail("forest leaf without targets");
        (*targets)[i] = r.numbers(k);
      }
    } else if (kind == "split") {
      nd.feature = static_cast<int>(r.integer(0, static_cast<std::int64_t>(n_features) - 1));
      nd.threshold = r.number();
      // Pre-order storage: children come after their parent.
      nd.left = static_cast<int>(r.integer(static_cast<std::int64_t>(i) + 1, static_cast<std::int64_t>(n) - 1));
      nd.right = static_cast<int>(r.integer(static_cast<std::int64_t>(i) + 1, static_cast<std::int64_t>(n) - 1));
    } else {
      r.fail("expected 'leaf' or 'split'");
    }
  }
  return tree;
}

std::vector<double> parse_list(std::string_view s, std::size_t at) {
  std::vector<double> out;
  for (auto f : io::split_fields(s)) {
    const auto v = io::parse_double(f);
    if (!v) throw CorruptModelError("bad number list '" + std::string(s) + "'", at);
    out.push_back(*v);
  }
  return out;
}

}  // namespace

std::string bundle_header(const QuantileModelBundle& b) {
  std::string h;
  h += std::string(kModelMagic) + ' ' + std::string(kModelVersion);
  h += " family=" + std::string(to_string(b.family));
  h += " levels=" + join(b.levels);
  h += " features=";
  const auto names = feature_names(b.features());
  for (std::size_t i = 0; i < names.size(); ++i) h += (i ? "," : "") + names[i];
  h += " bounds=" + join({b.bounds.age_min, b.bounds.age_max, b.bounds.bt_min, b.bounds.bt_max});
  h += " seed=" + std::to_string(b.seed);
  const auto& p = b.hyper;
  h += " gbm_trees=" + std::to_string(p.gbm.n_trees);
  h += " gbm_depth=" + std::to_string(p.gbm.max_depth);
  h += " gbm_lr=" + io::exact(p.gbm.learning_rate);
  h += " gbm_min_leaf=" + std::to_string(p.gbm.min_leaf);
  h += " rf_trees=" + std::to_string(p.rf.n_trees);
  h += " rf_depth=" + std::to_string(p.rf.max_depth);
  h += " rf_min_leaf=" + std::to_string(p.rf.min_leaf);
  h += " rf_bootstrap=" + std::string(p.rf.bootstrap ? "1" : "0");
  h += " mlp_hidden=" + std::to_string(p.mlp.hidden);
  h += " mlp_epochs=" + std::to_string(p.mlp.epochs);
  h += " mlp_lr=" + io::exact(p.mlp.learning_rate);
  h += " mlp_batch=" + std::to_string(p.mlp.batch);
  h += " svr_epsilon=" + io::exact(p.svr_epsilon);
  h += " svr_c=" + io::exact(p.svr_c);
  return h;
}

std::string serialize_bundle(const QuantileModelBundle& b) {
  std::string out = bundle_header(b);
  out += '\n';
  if (const auto* lin = std::get_if<LinearBody>(&b.body)) {
    for (std::size_t j = 0; j < lin->models.size(); ++j) {
      const auto& m = lin->models[j];
      out += "linear " + std::to_string(m.coefficients.size());
      put(out, m.intercept);
      put(out, lin->offsets[j]);
      for (double c : m.coefficients) put(out, c);
      out += '\n';
    }
  } else if (const auto* gbm = std::get_if<GbmBody>(&b.body)) {
    for (const auto& m : gbm->models) {
      out += "gbm";
      put(out, m.tau);
      put(out, m.base_score);
      put(out, m.learning_rate);
      out += ' ' + std::to_string(m.trees.size()) + '\n';
      for (const auto& t : m.trees) put_tree(out, t, nullptr, 0);
    }
  } else if (const auto* rf = std::get_if<ForestBody>(&b.body)) {
    out += "forest " + std::to_string(rf->forest.trees.size()) + '\n';
    for (const auto& t : rf->forest.trees) put_tree(out, t.tree, &t.leaf_targets, t.bootstrap_seed);
  } else {
    const auto& m = std::get<MlpBody>(b.body).model;
    out += "mlp " + std::to_string(m.inputs) + ' ' + std::to_string(m.hidden) + ' ' + std::to_string(m.outputs()) + '\n';
    put_row(out, "input_mean", m.input_mean);
    put_row(out, "input_scale", m.input_scale);
    put_row(out, "target", {m.target_mean, m.target_scale});
    put_row(out, "w1", m.w1);
    put_row(out, "b1", m.b1);
    put_row(out, "w2", m.w2);
    put_row(out, "b2", m.b2);
  }
  out += "end\n";
  return out;
}

QuantileModelBundle parse_bundle(std::string_view text) {
  const std::size_t eol = std::min(text.find('\n'), text.size());
  const std::string_view header = text.substr(0, eol);

  // Header: magic, version, then key=value fields.
  std::map<std::string, std::pair<std::string, std::size_t>> fields;
  {
    Reader h(header, 0);
    std::size_t at = 0;
    if (h.at_end() || h.next(&at) != kModelMagic) throw CorruptModelError("not a vqr model file", 0);
    if (h.at_end()) throw CorruptModelError("missing format version", header.size());
    const auto version = h.next(&at);
    if (version != kModelVersion) {
      throw VersionMismatchError("model format version '" + std::string(version) + "' is not supported (expected " +
                                 std::string(kModelVersion) + ")");
    }
    while (!h.at_end()) {
      const auto tok = h.next(&at);
      const auto eq = tok.find('=');
      if (eq == std::string_view::npos) throw CorruptModelError("malformed header field", at);
      fields[std::string(tok.substr(0, eq))] = {std::string(tok.substr(eq + 1)), at + eq + 1};
    }
  }
  auto field = [&](const std::string& key) -> const std::pair<std::string, std::size_t>& {
    const auto it = fields.find(key);
    if (it == fields.end()) throw CorruptModelError("header lacks '" + key + "'", header.size());
    return it->second;
  };
  auto num = [&](const std::string& key) {
    const auto& [s, at] = field(key);
    const auto v = io::parse_double(s);
    if (!v) throw CorruptModelError("bad value for '" + key + "'", at);
    return *v;
  };
  auto whole = [&](const std::string& key) {
    const auto& [s, at] = field(key);
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw CorruptModelError("bad value for '" + key + "'", at);
    return v;
  };

  QuantileModelBundle b;
  {
    const auto& [tag, at] = field("family");
    try {
      b.family = parse_family(tag);
    } catch (const DomainError&) {
      throw CorruptModelError("unknown family '" + tag + "'", at);
    }
  }
  {
    const auto& [s, at] = field("levels");
    b.levels = parse_list(s, at);
    try {
      check_levels(b.levels);
    } catch (const DomainError& e) {
      throw CorruptModelError(e.what(), at);
    }
  }
  {
    const auto& [s, at] = field("features");
    std::string expect;
    const auto names = feature_names(b.features());
    for (std::size_t i = 0; i < names.size(); ++i) expect += (i ? "," : "") + names[i];
    if (s != expect) throw CorruptModelError("feature list does not match the family", at);
  }
  {
    const auto& [s, at] = field("bounds");
    const auto v = parse_list(s, at);
    if (v.size() != 4) throw CorruptModelError("bounds need four values", at);
    b.bounds = {v[0], v[1], v[2], v[3]};
  }
  b.seed = whole("seed");
  b.hyper.gbm.n_trees = whole("gbm_trees");
  b.hyper.gbm.max_depth = static_cast<int>(whole("gbm_depth"));
  b.hyper.gbm.learning_rate = num("gbm_lr");
  b.hyper.gbm.min_leaf = whole("gbm_min_leaf");
  b.hyper.rf.n_trees = whole("rf_trees");
  b.hyper.rf.max_depth = static_cast<int>(whole("rf_depth"));
  b.hyper.rf.min_leaf = whole("rf_min_leaf");
  b.hyper.rf.bootstrap = whole("rf_bootstrap") != 0;
  b.hyper.rf.seed = b.seed;
  b.hyper.mlp.hidden = whole("mlp_hidden");
  b.hyper.mlp.epochs = whole("mlp_epochs");
  b.hyper.mlp.learning_rate = num("mlp_lr");
  b.hyper.mlp.batch = whole("mlp_batch");
  b.hyper.mlp.seed = b.seed;
  b.hyper.svr_epsilon = num("svr_epsilon");
  b.hyper.svr_c = num("svr_c");

  Reader r(text, eol);
  const std::size_t L = b.levels.size();
  const std::size_t n_features = feature_count(b.features());
  switch (b.family) {
    case Family::GBM: {
      GbmBody body;
      for (std::size_t j = 0; j < L; ++j) {
        r.expect("gbm");
        GbmModel m;
        m.tau = r.number();
        m.base_score = r.number();
        m.learning_rate = r.number();
        const std::size_t n = r.count();
        for (std::size_t t = 0; t < n; ++t) m.trees.push_back(read_tree(r, nullptr, nullptr, n_features));
        body.models.push_back(std::move(m));
      }
      b.body = std::move(body);
      break;
    }
    case Family::RF: {
      ForestBody body;
      r.expect("forest");
      const std::size_t n = r.count();
      for (std::size_t t = 0; t < n; ++t) {
        ForestTree ft;
        ft.tree = read_tree(r, &ft.leaf_targets, &ft.bootstrap_seed, n_features);
        body.forest.trees.push_back(std::move(ft));
      }
      b.body = std::move(body);
      break;
    }
    case Family::MLP: {
      r.expect("mlp");
      const std::size_t in = r.count(1'000);
      const std::size_t hidden = r.count(100'000);
      const std::size_t outs = r.count(1'000);
      if (in != n_features || outs != L || hidden == 0) r.fail("network shape does not match the header");
      MlpModel m = make_mlp(in, hidden, b.levels);
      r.expect("input_mean");
      m.input_mean = r.numbers(in);
      r.expect("input_scale");
      m.input_scale = r.numbers(in);
      r.expect("target");
      m.target_mean = r.number();
      m.target_scale = r.number();
      r.expect("w1");
      m.w1 = r.numbers(hidden * in);
      r.expect("b1");
      m.b1 = r.numbers(hidden);
      r.expect("w2");
      m.w2 = r.numbers(outs * hidden);
      r.expect("b2");
      m.b2 = r.numbers(outs);
      b.body = MlpBody{std::move(m)};
      break;
    }
    default: {
      LinearBody body;
      const auto names = feature_names(b.features());
      for (std::size_t j = 0; j < L; ++j) {
        r.expect("linear");
        const std::size_t k = r.count(1'000);
        if (k != names.size()) r.fail("coefficient count does not match the feature list");
        LinearModel m;
        m.features = b.features();
        m.feature_names = names;
        m.intercept = r.number();
        body.offsets.push_back(r.number());
        m.coefficients = r.numbers(k);
        body.models.push_back(std::move(m));
      }
      b.body = std::move(body);
      break;
    }
  }
  r.expect("end");
  if (!r.at_end()) {
    std::size_t at = 0;
    r.next(&at);
    throw CorruptModelError("trailing content after 'end'", at);
  }
  return b;
}

void save_model(const QuantileModelBundle& bundle, const std::filesystem::path& path) {
  io::write_file(path, serialize_bundle(bundle));
}

QuantileModelBundle load_model(const std::filesystem::path& path) {
  const auto text = io::read_file(path);
  return parse_bundle(text);
}

std::string model_id_of_text(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string model_id(const QuantileModelBundle& bundle) { return model_id_of_text(serialize_bundle(bundle)); }

}  // namespace vqr
