#include "volalg/checkpoint.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "format_util.hpp"
#include "volalg/errors.hpp"

namespace volalg {

namespace {

void put_scalar(std::ostream& out, const char* name, double v) {
  out << "scalar " << name << ' ' << detail::format_hex(v) << "\n";
}

void put_int(std::ostream& out, const char* name, long long v) {
  out << "int " << name << ' ' << v << "\n";
}

void put_vec(std::ostream& out, const char* name, const Vec& v) {
  out << "vec " << name << ' ' << v.size();
  for (double e : v) out << ' ' << detail::format_hex(e);
  out << "\n";
}

struct Entries {
  std::map<std::string, double> scalars;
  std::map<std::string, long long> ints;
  std::map<std::string, Vec> vecs;

  double scalar(const std::string& name) const {
    auto it = scalars.find(name);
    if (it == scalars.end()) {
      throw ParseError("checkpoint is missing scalar '" + name + "'");
    }
    return it->second;
  }
  long long integer(const std::string& name) const {
    auto it = ints.find(name);
    if (it == ints.end()) {
      throw ParseError("checkpoint is missing int '" + name + "'");
    }
    return it->second;
  }
  Vec vec(const std::string& name) const {
    auto it = vecs.find(name);
    if (it == vecs.end()) {
      throw ParseError("checkpoint is missing vec '" + name + "'");
    }
    return it->second;
  }
};

}  // namespace

void save_checkpoint(const OptimizerState& state, std::ostream& out) {
  out << "volalg-checkpoint 1\n";
  out << "kind " << kind_name(state) << "\n";
  if (const auto* vol = std::get_if<VolumeState>(&state)) {
    put_scalar(out, "gy", vol->gy);
    put_scalar(out, "s", vol->s);
    put_scalar(out, "upper", vol->upper);
    put_scalar(out, "lower", vol->lower);
    put_scalar(out, "alpha", vol->alpha);
    put_int(out, "maximize", vol->sense == Sense::kMaximize ? 1 : 0);
    put_int(out, "initialized", vol->initialized ? 1 : 0);
    put_vec(out, "d", vol->d);
  } else if (const auto* mom = std::get_if<MomentumState>(&state)) {
    put_scalar(out, "lr", mom->lr);
    put_scalar(out, "mu", mom->mu);
    put_vec(out, "velocity", mom->velocity);
  } else if (const auto* adam = std::get_if<AdamState>(&state)) {
    put_scalar(out, "lr", adam->lr);
    put_scalar(out, "beta1", adam->beta1);
    put_scalar(out, "beta2", adam->beta2);
    put_scalar(out, "eps_hat", adam->eps_hat);
    put_int(out, "t", adam->t);
    put_vec(out, "m", adam->m);
    put_vec(out, "v", adam->v);
  } else {
    const auto& rms = std::get<RmspropState>(state);
    put_scalar(out, "lr", rms.lr);
    put_scalar(out, "rho", rms.rho);
    put_scalar(out, "eps_hat", rms.eps_hat);
    put_vec(out, "ms", rms.ms);
  }
  out << "end\n";
}

void save_checkpoint(const OptimizerState& state, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write checkpoint: " + path);
  save_checkpoint(state, out);
}

OptimizerState load_checkpoint(std::istream& in) {
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != "volalg-checkpoint") {
    throw ParseError("not a volalg checkpoint");
  }
  if (version != 1) {
    throw ParseError("unsupported checkpoint version " +
                     std::to_string(version));
  }
  std::string word, kind;
  if (!(in >> word >> kind) || word != "kind") {
    throw ParseError("checkpoint is missing its kind line");
  }

  Entries e;
  while (in >> word) {
    if (word == "end") break;
    std::string name;
    if (!(in >> name)) throw ParseError("truncated checkpoint entry");
    if (word == "scalar") {
      std::string token;
      double v = 0.0;
      if (!(in >> token) || !detail::parse_double(token, v)) {
        throw ParseError("bad scalar '" + name + "' in checkpoint");
      }
      e.scalars[name] = v;
    } else if (word == "int") {
      long long v = 0;
      if (!(in >> v)) throw ParseError("bad int '" + name + "' in checkpoint");
      e.ints[name] = v;
    } else if (word == "vec") {
      std::size_t len = 0;
      if (!(in >> len)) {
        throw ParseError("bad vec length for '" + name + "' in checkpoint");
      }
      Vec v(len);
      for (std::size_t i = 0; i < len; ++i) {
        std::string token;
        if (!(in >> token) || !detail::parse_double(token, v[i])) {
          throw ParseError("truncated vec '" + name + "' in checkpoint");
        }
      }
      e.vecs[name] = std::move(v);
    } else {
      throw ParseError("unknown checkpoint entry '" + word + "'");
    }
  }
  if (word != "end") throw ParseError("checkpoint is missing 'end'");

  if (kind == "volume") {
    VolumeState st;
    st.gy = e.scalar("gy");
    st.s = e.scalar("s");
    st.upper = e.scalar("upper");
    st.lower = e.scalar("lower");
    st.alpha = e.scalar("alpha");
    st.sense = e.integer("maximize") ? Sense::kMaximize : Sense::kMinimize;
    st.initialized = e.integer("initialized") != 0;
    st.d = e.vec("d");
    return st;
  }
  if (kind == "momentum") {
    MomentumState st;
    st.lr = e.scalar("lr");
    st.mu = e.scalar("mu");
    st.velocity = e.vec("velocity");
    return st;
  }
  if (kind == "adam") {
    AdamState st;
    st.lr = e.scalar("lr");
    st.beta1 = e.scalar("beta1");
    st.beta2 = e.scalar("beta2");
    st.eps_hat = e.scalar("eps_hat");
    st.t = e.integer("t");
    st.m = e.vec("m");
    st.v = e.vec("v");
    return st;
  }
  if (kind == "rmsprop") {
    RmspropState st;
    st.lr = e.scalar("lr");
    st.rho = e.scalar("rho");
    st.eps_hat = e.scalar("eps_hat");
    st.ms = e.vec("ms");
    return st;
  }
  throw ParseError("unknown optimizer kind '" + kind + "' in checkpoint");
}

OptimizerState load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open checkpoint: " + path);
  return load_checkpoint(in);
}

}  // namespace volalg
