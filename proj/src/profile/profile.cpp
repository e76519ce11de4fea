#include "acn/profile/profile.h"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "acn/core/error.h"
#include "acn/core/io.h"

namespace acn::profile {

void SimilarityConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error(ErrorCode::InvalidArgument, "gamma outside [0,1]");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha outside [0,1]");
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double lexical_overlap(const std::map<std::string, double>& a, const std::map<std::string, double>& b) {
  double sa = 0.0;
  double sb = 0.0;
  for (const auto& [t, w] : a) sa += w;
  for (const auto& [t, w] : b) sb += w;
  if (sa <= 0.0 || sb <= 0.0) return 0.0;
  // Both maps are sorted; walk them together.
  double shared = 0.0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      shared += std::min(ia->second, ib->second);
      ++ia;
      ++ib;
    }
  }
  return shared / std::max(sa, sb);
}

double hybrid_similarity(const providers::EmbeddingPair& a, const providers::EmbeddingPair& b,
                         double alpha) {
  const double cos = std::clamp(cosine(a.dense, b.dense), 0.0, 1.0);
  const double s = alpha * cos + (1.0 - alpha) * lexical_overlap(a.lexical, b.lexical);
  return std::clamp(s, 0.0, 1.0);
}

UserProfile update_profile(const UserProfile& profile, const ProfileDescriptor& d_new,
                           const SimilarityConfig& cfg, providers::Embedder& embedder,
                           UpdateOutcome* outcome) {
  cfg.validate();
  if (d_new.text.empty()) throw Error(ErrorCode::Precondition, "descriptor text is empty");
  UpdateOutcome local;
  UserProfile next = profile;
  if (!profile.descriptors.empty()) {
    const auto e_new = embedder.embed(d_new.text);
    std::size_t best = 0;
    for (std::size_t i = 0; i < profile.descriptors.size(); ++i) {
      const double s = hybrid_similarity(e_new, embedder.embed(profile.descriptors[i].text), cfg.alpha);
      local.scores.push_back(s);
      if (s > local.scores[best]) best = i;
    }
    local.best_score = local.scores[best];
    if (local.best_score >= cfg.gamma) {
      next.descriptors[best] = d_new;
      local.replaced = best;
    }
  }
  if (!local.replaced) next.descriptors.push_back(d_new);
  if (outcome) *outcome = std::move(local);
  return next;
}

std::string render_profile_prompt(const UserProfile& profile) {
  if (profile.descriptors.empty()) return std::string(kEmptyProfileLine);
  std::string out;
  for (const auto& d : profile.descriptors) {
    if (!out.empty()) out += '\n';
    out += "- " + d.text + " (attitude: " + std::string(to_string(d.attitude)) + ")";
  }
  return out;
}

json to_json(const UserProfile& p) {
  json ds = json::array();
  for (const auto& d : p.descriptors) {
    ds.push_back({{"text", d.text}, {"attitude", to_string(d.attitude)}, {"updated_at", d.updated_at}});
  }
  return {{"user_id", p.user_id}, {"descriptors", ds}};
}

UserProfile profile_from_json(const json& j) {
  UserProfile p;
  p.user_id = j.at("user_id").get<std::string>();
  for (const auto& d : j.at("descriptors")) {
    ProfileDescriptor pd;
    pd.text = d.at("text").get<std::string>();
    pd.attitude = attitude_from_string(d.at("attitude").get<std::string>());
    pd.updated_at = d.value("updated_at", "");
    if (pd.text.empty()) throw Error(ErrorCode::Parse, "descriptor with empty text");
    p.descriptors.push_back(std::move(pd));
  }
  return p;
}

ProfileStore::ProfileStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path ProfileStore::path_for(const std::string& user_id) const {
  const bool ok = !user_id.empty() && user_id.size() <= 128 && user_id.front() != '.' &&
                  std::all_of(user_id.begin(), user_id.end(), [](char c) {
                    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
                  });
  if (!ok) throw Error(ErrorCode::InvalidArgument, "invalid user id '" + user_id + "'");
  return dir_ / (user_id + ".json");
}

std::mutex& ProfileStore::user_mutex(const std::string& user_id) const {
  std::lock_guard lock(map_mu_);
  auto& slot = user_mu_[user_id];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

UserProfile ProfileStore::load(const std::string& user_id) const {
  const auto path = path_for(user_id);
  if (!std::filesystem::exists(path)) return UserProfile{user_id, {}};
  try {
    UserProfile p = profile_from_json(json::parse(io::read_file(path)));
    if (p.user_id != user_id) throw Error(ErrorCode::Parse, "user id mismatch");
    return p;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::Storage, "profile for '" + user_id + "' is unreadable: " + e.what());
  }
}

void ProfileStore::save(const UserProfile& profile) {
  std::lock_guard lock(user_mutex(profile.user_id));
  io::write_atomic(path_for(profile.user_id), to_json(profile).dump(2) + "\n");
}

UserProfile ProfileStore::update(const std::string& user_id, const ProfileDescriptor& d_new,
                                 const SimilarityConfig& cfg, providers::Embedder& embedder,
                                 UpdateOutcome* outcome) {
  std::lock_guard lock(user_mutex(user_id));
  UserProfile next = update_profile(load(user_id), d_new, cfg, embedder, outcome);
  io::write_atomic(path_for(user_id), to_json(next).dump(2) + "\n");
  return next;
}

}  // namespace acn::profile
