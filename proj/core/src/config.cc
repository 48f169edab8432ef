#include "pointscene/config.h"

#include <set>
#include <type_traits>

#include "pointscene/error.h"
#include "pointscene/io.h"

namespace pointscene {
namespace {

void RejectUnknown(const nlohmann::json& j, const std::set<std::string>& known,
                   const std::string& where) {
  PS_CHECK(j.is_object(), ErrorCode::kInvalidArgument,
           "config " + where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    PS_CHECK(known.count(key), ErrorCode::kInvalidArgument,
             "unknown config key " + where + "." + key);
  }
}

template <typename T>
void Take(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  const nlohmann::json& v = j.at(key);
  if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
    PS_CHECK(v.is_number_integer(), ErrorCode::kInvalidArgument,
             std::string("config key ") + key + " must be an integer");
  }
  out = v.get<T>();
}

}  // namespace

void PipelineConfig::Validate() const {
  filter.Validate();
  unify.Validate();
  splat.Validate();
  PS_CHECK(threads >= 0, ErrorCode::kInvalidArgument, "threads must be >= 0");
  PS_CHECK(external.timeout_secs > 0 && external.max_attempts >= 1 &&
               external.max_concurrency >= 1 &&
               external.initial_backoff_secs >= 0,
           ErrorCode::kInvalidArgument, "bad backend settings");
}

nlohmann::json PipelineConfig::ToJson() const {
  return {{"filter",
           {{"tau", filter.tau},
            {"min_violations", filter.min_violations},
            {"min_observations", filter.min_observations}}},
          {"unify",
           {{"eta", unify.eta},
            {"min_group_points", unify.min_group_points},
            {"closing_radius", unify.closing_radius}}},
          {"splat",
           {{"splat_radius", splat.splat_radius},
            {"z_epsilon", splat.z_epsilon}}},
          {"backend",
           {{"name", backend},
            {"endpoint", external.endpoint},
            {"timeout_secs", external.timeout_secs},
            {"max_attempts", external.max_attempts},
            {"initial_backoff_secs", external.initial_backoff_secs},
            {"max_concurrency", external.max_concurrency}}},
          {"metrics",
           {{"depth_scale_align", depth_scale_align},
            {"pose_estimate_scale", pose_estimate_scale}}},
          {"threads", threads}};
}

void PipelineConfig::MergeJson(const nlohmann::json& j) {
  try {
    RejectUnknown(j, {"filter", "unify", "splat", "backend", "metrics",
                      "threads"},
                  "root");
    if (j.contains("filter")) {
      const auto& f = j.at("filter");
      RejectUnknown(f, {"tau", "min_violations", "min_observations"},
                    "filter");
      Take(f, "tau", filter.tau);
      Take(f, "min_violations", filter.min_violations);
      Take(f, "min_observations", filter.min_observations);
    }
    if (j.contains("unify")) {
      const auto& u = j.at("unify");
      RejectUnknown(u, {"eta", "min_group_points", "closing_radius"}, "unify");
      Take(u, "eta", unify.eta);
      Take(u, "min_group_points", unify.min_group_points);
      Take(u, "closing_radius", unify.closing_radius);
    }
    if (j.contains("splat")) {
      const auto& s = j.at("splat");
      RejectUnknown(s, {"splat_radius", "z_epsilon"}, "splat");
      Take(s, "splat_radius", splat.splat_radius);
      Take(s, "z_epsilon", splat.z_epsilon);
    }
    if (j.contains("backend")) {
      const auto& b = j.at("backend");
      RejectUnknown(b, {"name", "endpoint", "timeout_secs", "max_attempts",
                        "initial_backoff_secs", "max_concurrency"},
                    "backend");
      Take(b, "name", backend);
      Take(b, "endpoint", external.endpoint);
      Take(b, "timeout_secs", external.timeout_secs);
      Take(b, "max_attempts", external.max_attempts);
      Take(b, "initial_backoff_secs", external.initial_backoff_secs);
      Take(b, "max_concurrency", external.max_concurrency);
    }
    if (j.contains("metrics")) {
      const auto& m = j.at("metrics");
      RejectUnknown(m, {"depth_scale_align", "pose_estimate_scale"},
                    "metrics");
      Take(m, "depth_scale_align", depth_scale_align);
      Take(m, "pose_estimate_scale", pose_estimate_scale);
    }
    Take(j, "threads", threads);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("config: ") + e.what());
  }
}

PipelineConfig PipelineConfig::FromFile(const std::filesystem::path& path) {
  PipelineConfig cfg;
  cfg.MergeJson(ReadJson(path));
  cfg.Validate();
  return cfg;
}

}  // namespace pointscene
