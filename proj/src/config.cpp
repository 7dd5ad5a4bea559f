#include "gwrap/config.hpp"

#include <omp.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include <nlohmann/json.hpp>

#include "gwrap/error.hpp"

namespace gwrap {

using Json = nlohmann::ordered_json;

void RunConfig::apply_seed() {
  wrap.seed = seed;
  wrap.render = render;
  pam.seed = seed;
  pam.neighbors = neighbors;
}

namespace {

// The field list is written once and replayed by a writer and a reader.
template <typename V>
void visit(RunConfig& c, V& v) {
  v.field("seed", c.seed);
  v.section("scene", [&] {
    v.field("alpha_max", c.scene.alpha_max);
    v.field("support_sigma", c.scene.support_sigma);
    v.field("vacancy_camera_subset", c.vacancy_camera_subset);
  });
  v.section("fields", [&] {
    v.field("neighbors", c.neighbors);
    v.field("vector_zero_eps", c.vector_zero_eps);
  });
  v.section("render", [&] {
    v.field("early_stop_T", c.render.early_stop_T);
    v.field("background", c.render.background);
  });
  v.section("wrap", [&] {
    v.field("iterations", c.wrap.iterations);
    v.field("lr_sign", c.wrap.lr_sign);
    v.field("lr_dir", c.wrap.lr_dir);
    v.field("loss_weight", c.wrap.loss_weight);
    v.field("densify_every", c.wrap.densify_every);
    v.field("densify_fraction", c.wrap.densify_fraction);
    v.field("fd_step", c.wrap.fd_step);
    v.field("views_per_step", c.wrap.views_per_step);
    v.field("min_weight", c.wrap.min_weight);
  });
  v.section("mtet", [&] {
    v.field("multi_pivot", c.mtet.multi_pivot);
    v.field("refine_tol", c.mtet.refine_tol);
    v.field("refine_iterations", c.mtet.refine_iterations);
  });
  v.section("pam", [&] {
    v.field("samples", c.pam.samples);
    v.field("newton_steps", c.pam.newton_steps);
    v.field("eps", c.pam.eps);
    v.field("samples_per_tet", c.pam.samples_per_tet);
    v.field("max_rounds", c.pam.max_rounds);
    v.field("roi", c.pam.roi);
  });
  v.section("eval", [&] {
    v.field("tau", c.eval.tau);
    v.field("uniform_count", c.eval.uniform_count);
  });
  v.section("verify", [&] {
    v.field("tolerance", c.verify.tolerance);
    v.field("step", c.verify.step);
  });
}

Json encode(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }
Json encode(const std::optional<Aabb>& b) {
  if (!b) return nullptr;
  return Json::array({b->lo.x(), b->lo.y(), b->lo.z(), b->hi.x(), b->hi.y(), b->hi.z()});
}
template <typename T>
Json encode(const T& v) {
  return v;
}

struct Writer {
  Json root = Json::object();
  Json* cur = &root;

  template <typename T>
  void field(const char* key, T& value) {
    (*cur)[key] = encode(value);
  }
  template <typename F>
  void section(const char* key, F&& body) {
    Json* outer = cur;
    (*outer)[key] = Json::object();
    cur = &(*outer)[key];
    body();
    cur = outer;
  }
};

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::kParseError, "config: '" + path + "' " + what);
}

std::vector<double> numbers(const Json& j, const std::string& path, std::size_t n) {
  if (!j.is_array() || j.size() != n)
    bad(path, "must be an array of " + std::to_string(n) + " numbers");
  std::vector<double> out;
  for (const Json& x : j) {
    if (!x.is_number()) bad(path, "must contain numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

void decode(const Json& j, const std::string& path, Vec3& v) {
  const auto x = numbers(j, path, 3);
  v = Vec3(x[0], x[1], x[2]);
}
void decode(const Json& j, const std::string& path, std::optional<Aabb>& b) {
  if (j.is_null()) {
    b.reset();
    return;
  }
  const auto x = numbers(j, path, 6);
  b = Aabb{Vec3(x[0], x[1], x[2]), Vec3(x[3], x[4], x[5])};
}
template <typename T>
void decode(const Json& j, const std::string& path, T& v) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!j.is_boolean()) bad(path, "must be a boolean");
  } else if constexpr (std::is_unsigned_v<T>) {
    if (!j.is_number_unsigned()) bad(path, "must be a non-negative integer");
  } else if constexpr (std::is_integral_v<T>) {
    if (!j.is_number_integer()) bad(path, "must be an integer");
  } else {
    if (!j.is_number()) bad(path, "must be a number");
  }
  v = j.get<T>();
}

struct Reader {
  const Json* cur;
  std::string prefix;
  std::set<std::string> seen;

  explicit Reader(const Json& root) : cur(&root) {}

  template <typename T>
  void field(const char* key, T& value) {
    seen.insert(prefix + key);
    if (cur->contains(key)) decode((*cur)[key], prefix + key, value);
  }
  template <typename F>
  void section(const char* key, F&& body) {
    seen.insert(prefix + key);
    if (!cur->contains(key)) return;
    const Json& sub = (*cur)[key];
    if (!sub.is_object()) bad(prefix + key, "must be an object");
    const Json* outer = cur;
    const std::string outer_prefix = prefix;
    cur = &sub;
    prefix += std::string(key) + ".";
    body();
    check_unknown(sub);
    cur = outer;
    prefix = outer_prefix;
  }
  void check_unknown(const Json& obj) const {
    for (const auto& item : obj.items())
      if (!seen.count(prefix + item.key())) bad(prefix + item.key(), "is not a known key");
  }
};

}  // namespace

std::string dump_config(const RunConfig& config) {
  RunConfig copy = config;
  Writer w;
  visit(copy, w);
  return w.root.dump(2) + "\n";
}

RunConfig parse_config(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kParseError, std::string("config: ") + e.what());
  }
  if (!root.is_object()) throw Error(ErrorCode::kParseError, "config: top level must be an object");
  RunConfig c;
  Reader r(root);
  visit(c, r);
  r.check_unknown(root);
  validate(c);
  c.apply_seed();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate(const RunConfig& c) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::kBadParams, std::string("config: ") + what);
  };
  require(c.scene.alpha_max > 0.0 && c.scene.alpha_max < 1.0, "scene.alpha_max must be in (0, 1)");
  require(c.scene.support_sigma > 0.0, "scene.support_sigma must be positive");
  require(c.neighbors >= 1, "fields.neighbors must be at least 1");
  require(c.vector_zero_eps >= 0.0, "fields.vector_zero_eps must be non-negative");
  require(c.render.early_stop_T >= 0.0 && c.render.early_stop_T < 1.0,
          "render.early_stop_T must be in [0, 1)");
  require(c.mtet.refine_tol > 0.0, "mtet.refine_tol must be positive");
  require(c.mtet.refine_iterations >= 0, "mtet.refine_iterations must be non-negative");
  require(c.eval.tau >= 0.0, "eval.tau must be non-negative");
  require(c.eval.uniform_count >= 1, "eval.uniform_count must be at least 1");
  require(c.verify.tolerance > 0.0, "verify.tolerance must be positive");
  require(c.verify.step > 0.0, "verify.step must be positive");
  RunConfig copy = c;
  copy.apply_seed();
  validate(copy.wrap);
  validate(copy.pam);
}

int apply_thread_limit() {
  if (const char* env = std::getenv("GWRAP_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) omp_set_num_threads(static_cast<int>(n));
  }
  return omp_get_max_threads();
}

}  // namespace gwrap
