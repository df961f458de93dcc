#include "xtopics/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace xtopics {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'X', 'T', 'C', 'K', 'P', 'T', '0', '1'};

// --- little binary codec ----------------------------------------------------

void enc_u64(std::string& b, std::uint64_t v) {
  char raw[8];
  for (int i = 0; i < 8; ++i) raw[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  b.append(raw, 8);
}

void enc(std::string& b, double v) {
  char raw[8];
  std::memcpy(raw, &v, 8);
  b.append(raw, 8);
}
void enc(std::string& b, std::int32_t v) {
  enc_u64(b, static_cast<std::uint64_t>(static_cast<std::uint32_t>(v)) |
                 (static_cast<std::uint64_t>(v < 0 ? 0xffffffffu : 0u) << 32));
}
void enc(std::string& b, std::int8_t v) { b.push_back(static_cast<char>(v)); }
void enc(std::string& b, char v) { b.push_back(v); }

template <typename T>
void enc(std::string& b, const std::vector<T>& v) {
  enc_u64(b, v.size());
  for (const auto& x : v) enc(b, x);
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw DataError("checkpoint: truncated section");
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i]))
           << (8 * i);
    pos += 8;
    return v;
  }
  void dec(double& v) {
    need(8);
    std::memcpy(&v, buf.data() + pos, 8);
    pos += 8;
  }
  void dec(std::int32_t& v) { v = static_cast<std::int32_t>(u64()); }
  void dec(std::int8_t& v) {
    need(1);
    v = static_cast<std::int8_t>(buf[pos++]);
  }
  void dec(char& v) {
    need(1);
    v = buf[pos++];
  }
  template <typename T>
  void dec(std::vector<T>& v) {
    const std::uint64_t n = u64();
    if (n > buf.size()) throw DataError("checkpoint: implausible section size");
    v.resize(n);
    for (auto& x : v) dec(x);
  }
};

// Some tables use plain int; serialize through int32.
void enc(std::string& b, const std::vector<int>& v) {
  enc_u64(b, v.size());
  for (int x : v) enc(b, static_cast<std::int32_t>(x));
}
void dec_int(Reader& r, std::vector<int>& v) {
  const std::uint64_t n = r.u64();
  v.resize(n);
  for (auto& x : v) {
    std::int32_t t;
    r.dec(t);
    x = t;
  }
}
void enc(std::string& b, const std::vector<std::vector<int>>& v) {
  enc_u64(b, v.size());
  for (const auto& x : v) enc(b, x);
}
void dec_int(Reader& r, std::vector<std::vector<int>>& v) {
  v.resize(r.u64());
  for (auto& x : v) dec_int(r, x);
}

// --- container --------------------------------------------------------------

void write_u64(std::ostream& out, std::uint64_t v) {
  std::string b;
  enc_u64(b, v);
  out.write(b.data(), 8);
}

std::uint64_t read_u64(std::istream& in) {
  char raw[8];
  if (!in.read(raw, 8)) throw DataError("checkpoint: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(raw[i]))
         << (8 * i);
  return v;
}

void write_blob(std::ostream& out, const std::string& b) {
  write_u64(out, b.size());
  out.write(b.data(), static_cast<std::streamsize>(b.size()));
}

std::string read_blob(std::istream& in) {
  const std::uint64_t n = read_u64(in);
  std::string b(n, '\0');
  if (n > 0 && !in.read(b.data(), static_cast<std::streamsize>(n)))
    throw DataError("checkpoint: truncated file");
  return b;
}

using Sections = std::map<std::string, std::string>;

void write_container(std::ostream& out, const json& header,
                     const Sections& sections) {
  out.write(kMagic, 8);
  write_blob(out, header.dump());
  write_u64(out, sections.size());
  for (const auto& [name, payload] : sections) {
    write_blob(out, name);
    write_blob(out, payload);
  }
  if (!out) throw DataError("checkpoint: write failed");
}

json read_header(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw DataError("checkpoint: bad magic");
  try {
    return json::parse(read_blob(in));
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint: bad header: ") + e.what());
  }
}

Sections read_sections(std::istream& in) {
  Sections sections;
  const std::uint64_t n = read_u64(in);
  for (std::uint64_t i = 0; i < n; ++i) {
    std::string name = read_blob(in);
    sections[name] = read_blob(in);
  }
  return sections;
}

const std::string& section(const Sections& s, const std::string& name) {
  const auto it = s.find(name);
  if (it == s.end()) throw DataError("checkpoint: missing section " + name);
  return it->second;
}

// --- config <-> json ----------------------------------------------------------

json to_json(const CldaConfig& c) {
  return json{{"k_common", c.k_common},
              {"k_per_collection", c.k_per_collection},
              {"beta", c.beta},
              {"delta1", c.delta1},
              {"delta2", c.delta2},
              {"alpha_prior_shape", c.alpha_prior_shape},
              {"alpha_prior_rate", c.alpha_prior_rate},
              {"sweeps", c.sweeps},
              {"mh_steps", c.mh_steps},
              {"mh_word_first", c.mh_word_first},
              {"hyperopt_interval", c.hyperopt_interval},
              {"hyperopt_burnin", c.hyperopt_burnin},
              {"eval_interval", c.eval_interval},
              {"eval_particles", c.eval_particles},
              {"seed", c.seed},
              {"threads", c.threads},
              {"allow_no_anchor", c.allow_no_anchor}};
}

CldaConfig clda_config_from(const json& j) {
  CldaConfig c;
  c.k_common = j.at("k_common").get<int>();
  c.k_per_collection = j.at("k_per_collection").get<std::vector<int>>();
  c.beta = j.at("beta").get<double>();
  c.delta1 = j.at("delta1").get<double>();
  c.delta2 = j.at("delta2").get<double>();
  c.alpha_prior_shape = j.at("alpha_prior_shape").get<double>();
  c.alpha_prior_rate = j.at("alpha_prior_rate").get<double>();
  c.sweeps = j.at("sweeps").get<int>();
  c.mh_steps = j.at("mh_steps").get<int>();
  c.mh_word_first = j.at("mh_word_first").get<bool>();
  c.hyperopt_interval = j.at("hyperopt_interval").get<int>();
  c.hyperopt_burnin = j.at("hyperopt_burnin").get<int>();
  c.eval_interval = j.at("eval_interval").get<int>();
  c.eval_particles = j.at("eval_particles").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.threads = j.at("threads").get<int>();
  c.allow_no_anchor = j.at("allow_no_anchor").get<bool>();
  return c;
}

json to_json(const ChdpConfig& c) {
  return json{{"init_common", c.init_common},
              {"init_spec", c.init_spec},
              {"beta", c.beta},
              {"delta1", c.delta1},
              {"delta2", c.delta2},
              {"gamma_prior", {c.gamma_prior.shape, c.gamma_prior.rate}},
              {"alpha0_prior", {c.alpha0_prior.shape, c.alpha0_prior.rate}},
              {"alpha1_prior", {c.alpha1_prior.shape, c.alpha1_prior.rate}},
              {"sweeps", c.sweeps},
              {"mh_steps", c.mh_steps},
              {"mh_word_first", c.mh_word_first},
              {"eval_interval", c.eval_interval},
              {"eval_particles", c.eval_particles},
              {"seed", c.seed},
              {"threads", c.threads}};
}

ChdpConfig chdp_config_from(const json& j) {
  ChdpConfig c;
  c.init_common = j.at("init_common").get<int>();
  c.init_spec = j.at("init_spec").get<std::vector<int>>();
  c.beta = j.at("beta").get<double>();
  c.delta1 = j.at("delta1").get<double>();
  c.delta2 = j.at("delta2").get<double>();
  auto prior = [&](const char* key) {
    const auto& p = j.at(key);
    return GammaPrior{p.at(0).get<double>(), p.at(1).get<double>()};
  };
  c.gamma_prior = prior("gamma_prior");
  c.alpha0_prior = prior("alpha0_prior");
  c.alpha1_prior = prior("alpha1_prior");
  c.sweeps = j.at("sweeps").get<int>();
  c.mh_steps = j.at("mh_steps").get<int>();
  c.mh_word_first = j.at("mh_word_first").get<bool>();
  c.eval_interval = j.at("eval_interval").get<int>();
  c.eval_particles = j.at("eval_particles").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.threads = j.at("threads").get<int>();
  return c;
}

void check_corpus_shape(
    const Corpus& corpus,
    const std::vector<std::vector<std::vector<std::int32_t>>>& z) {
  if (static_cast<std::size_t>(corpus.num_collections()) != z.size())
    throw DataError("checkpoint: corpus collection count mismatch");
  for (std::size_t c = 0; c < z.size(); ++c) {
    if (corpus.collections[c].size() != z[c].size())
      throw DataError("checkpoint: corpus document count mismatch");
    for (std::size_t d = 0; d < z[c].size(); ++d)
      if (corpus.collections[c][d].tokens.size() != z[c][d].size())
        throw DataError("checkpoint: corpus token count mismatch");
  }
}

}  // namespace

CheckpointInfo read_checkpoint_info(std::istream& in) {
  const json h = read_header(in);
  CheckpointInfo info;
  info.kind = h.at("kind").get<std::string>();
  info.vocab_size = h.at("vocab_size").get<int>();
  info.vocab_hash = h.at("vocab_hash").get<std::uint64_t>();
  info.sweeps_done = h.at("sweeps_done").get<int>();
  return info;
}

CheckpointInfo read_checkpoint_info_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open " + path);
  return read_checkpoint_info(in);
}

void save_checkpoint(const CldaState& state, std::ostream& out) {
  json header{{"kind", "clda"},
              {"format_version", 1},
              {"vocab_size", state.vocab_size},
              {"vocab_hash", state.vocab_hash},
              {"sweeps_done", state.sweeps_done},
              {"config", to_json(state.config)}};
  Sections s;
  enc(s["eta"], state.eta);
  enc(s["alpha"], state.alpha);
  enc(s["z"], state.z);
  enc(s["y"], state.y);
  enc(s["doc_topic"], state.doc_topic);
  enc(s["branch"], state.branch);
  enc(s["shared_word"], state.shared_word);
  enc(s["shared_total"], state.shared_total);
  enc(s["spec_word"], state.spec_word);
  enc(s["spec_total"], state.spec_total);
  write_container(out, header, s);
}

CldaState load_clda_checkpoint(std::istream& in,
                               std::shared_ptr<const Corpus> corpus) {
  const json h = read_header(in);
  if (h.at("kind").get<std::string>() != "clda")
    throw DataError("checkpoint: not a clda checkpoint");
  const Sections s = read_sections(in);

  CldaState st;
  st.config = clda_config_from(h.at("config"));
  st.vocab_size = h.at("vocab_size").get<int>();
  st.vocab_hash = h.at("vocab_hash").get<std::uint64_t>();
  st.sweeps_done = h.at("sweeps_done").get<int>();

  auto load = [&](const char* name, auto& field) {
    Reader r{section(s, name)};
    r.dec(field);
    if (r.pos != r.buf.size())
      throw DataError(std::string("checkpoint: trailing bytes in ") + name);
  };
  load("eta", st.eta);
  load("alpha", st.alpha);
  load("z", st.z);
  load("y", st.y);
  load("doc_topic", st.doc_topic);
  load("branch", st.branch);
  load("shared_word", st.shared_word);
  load("shared_total", st.shared_total);
  load("spec_word", st.spec_word);
  load("spec_total", st.spec_total);

  if (corpus) {
    st.config.validate(*corpus);
    check_corpus_shape(*corpus, st.z);
    st.corpus = std::move(corpus);
    st.ensure_slots();
  }
  return st;
}

void save_checkpoint(const ChdpState& state, std::ostream& out) {
  json header{{"kind", "chdp"},
              {"format_version", 1},
              {"vocab_size", state.vocab_size},
              {"vocab_hash", state.vocab_hash},
              {"sweeps_done", state.sweeps_done},
              {"live_topics", state.live_topics},
              {"topic_version", state.topic_version},
              {"config", to_json(state.config)}};
  Sections s;
  enc(s["concentrations"], std::vector<double>{state.gamma_conc, state.alpha0,
                                               state.alpha1});
  enc(s["live"], state.live);
  enc(s["n_root"], state.n_root);
  enc(s["t_root"], state.t_root);
  enc(s["n_coll"], state.n_coll);
  enc(s["t_coll"], state.t_coll);
  enc(s["totals"], [&] {
    std::vector<int> v{state.total_root_customers};
    v.insert(v.end(), state.total_coll_customers.begin(),
             state.total_coll_customers.end());
    return v;
  }());
  // doc CRP: per collection, per document, flat (topic, n, t) triples
  {
    std::string& b = s["doc_crp"];
    enc_u64(b, state.doc_crp.size());
    for (const auto& coll : state.doc_crp) {
      enc_u64(b, coll.size());
      for (const auto& doc : coll) {
        // sorted for deterministic bytes
        std::map<int, ChdpState::DocCount> ordered(doc.begin(), doc.end());
        enc_u64(b, ordered.size());
        for (const auto& [topic, dc] : ordered) {
          enc(b, static_cast<std::int32_t>(topic));
          enc(b, static_cast<std::int32_t>(dc.n));
          enc(b, static_cast<std::int32_t>(dc.t));
        }
      }
    }
  }
  enc(s["branch"], state.branch);
  enc(s["shared_word"], state.shared_word);
  enc(s["shared_total"], state.shared_total);
  enc(s["spec_word"], state.spec_word);
  enc(s["spec_total"], state.spec_total);
  enc(s["z"], state.z);
  enc(s["y"], state.y);
  enc(s["u"], state.u);
  write_container(out, header, s);
}

ChdpState load_chdp_checkpoint(std::istream& in,
                               std::shared_ptr<const Corpus> corpus) {
  const json h = read_header(in);
  if (h.at("kind").get<std::string>() != "chdp")
    throw DataError("checkpoint: not a chdp checkpoint");
  const Sections s = read_sections(in);

  ChdpState st;
  st.config = chdp_config_from(h.at("config"));
  st.vocab_size = h.at("vocab_size").get<int>();
  st.vocab_hash = h.at("vocab_hash").get<std::uint64_t>();
  st.sweeps_done = h.at("sweeps_done").get<int>();
  st.live_topics = h.at("live_topics").get<int>();
  st.topic_version = h.at("topic_version").get<std::uint64_t>();

  {
    Reader r{section(s, "concentrations")};
    std::vector<double> conc;
    r.dec(conc);
    if (conc.size() != 3)
      throw DataError("checkpoint: bad concentrations section");
    st.gamma_conc = conc[0];
    st.alpha0 = conc[1];
    st.alpha1 = conc[2];
  }
  {
    Reader r{section(s, "live")};
    r.dec(st.live);
  }
  {
    Reader r{section(s, "n_root")};
    dec_int(r, st.n_root);
  }
  {
    Reader r{section(s, "t_root")};
    dec_int(r, st.t_root);
  }
  {
    Reader r{section(s, "n_coll")};
    dec_int(r, st.n_coll);
  }
  {
    Reader r{section(s, "t_coll")};
    dec_int(r, st.t_coll);
  }
  {
    Reader r{section(s, "totals")};
    std::vector<int> totals;
    dec_int(r, totals);
    if (totals.empty()) throw DataError("checkpoint: bad totals section");
    st.total_root_customers = totals[0];
    st.total_coll_customers.assign(totals.begin() + 1, totals.end());
  }
  {
    Reader r{section(s, "doc_crp")};
    st.doc_crp.resize(r.u64());
    for (auto& coll : st.doc_crp) {
      coll.resize(r.u64());
      for (auto& doc : coll) {
        const std::uint64_t n = r.u64();
        for (std::uint64_t e = 0; e < n; ++e) {
          std::int32_t topic, cn, ct;
          r.dec(topic);
          r.dec(cn);
          r.dec(ct);
          doc[topic] = ChdpState::DocCount{cn, ct};
        }
      }
    }
    if (r.pos != r.buf.size())
      throw DataError("checkpoint: trailing bytes in doc_crp");
  }
  auto load = [&](const char* name, auto& field) {
    Reader r{section(s, name)};
    r.dec(field);
    if (r.pos != r.buf.size())
      throw DataError(std::string("checkpoint: trailing bytes in ") + name);
  };
  load("branch", st.branch);
  load("shared_word", st.shared_word);
  load("shared_total", st.shared_total);
  load("spec_word", st.spec_word);
  load("spec_total", st.spec_total);
  load("z", st.z);
  load("y", st.y);
  load("u", st.u);

  if (corpus) {
    st.config.validate(*corpus);
    check_corpus_shape(*corpus, st.z);
    st.corpus = std::move(corpus);
  }
  st.reset_caches();
  return st;
}

namespace {

template <typename State>
void save_file(const State& state, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("checkpoint: cannot write " + path);
  save_checkpoint(state, out);
}

std::ifstream open_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open " + path);
  return in;
}

}  // namespace

void save_checkpoint_file(const CldaState& state, const std::string& path) {
  save_file(state, path);
}
void save_checkpoint_file(const ChdpState& state, const std::string& path) {
  save_file(state, path);
}
CldaState load_clda_checkpoint_file(const std::string& path,
                                    std::shared_ptr<const Corpus> corpus) {
  auto in = open_file(path);
  return load_clda_checkpoint(in, std::move(corpus));
}
ChdpState load_chdp_checkpoint_file(const std::string& path,
                                    std::shared_ptr<const Corpus> corpus) {
  auto in = open_file(path);
  return load_chdp_checkpoint(in, std::move(corpus));
}

}  // namespace xtopics
