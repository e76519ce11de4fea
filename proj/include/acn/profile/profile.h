#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "acn/core/types.h"
#include "acn/providers/providers.h"

namespace acn::profile {

/// One element of a user's profile. Attitude `None` marks basic facts
/// ("lives in Sydney"); preferences carry Positive, Neutral or Negative.
struct ProfileDescriptor {
  std::string text;
  Attitude attitude = Attitude::None;
  std::string updated_at;

  bool operator==(const ProfileDescriptor&) const = default;
};

struct UserProfile {
  std::string user_id;
  std::vector<ProfileDescriptor> descriptors;
};

struct SimilarityConfig {
  double gamma = 0.8;  // replace threshold
  double alpha = 0.5;  // dense weight in the hybrid mix

  void validate() const;
};

/// Cosine of two equal-length vectors; 0 when either has zero norm.
double cosine(std::span<const double> a, std::span<const double> b);

/// sum_t min(w_a(t), w_b(t)) / max(sum w_a, sum w_b), 0 when either sum is 0.
double lexical_overlap(const std::map<std::string, double>& a, const std::map<std::string, double>& b);

/// alpha * clamp(cosine, 0, 1) + (1 - alpha) * lexical_overlap.
double hybrid_similarity(const providers::EmbeddingPair& a, const providers::EmbeddingPair& b,
                         double alpha);

struct UpdateOutcome {
  std::optional<std::size_t> replaced;  // index replaced, empty when appended
  double best_score = 0.0;
  std::vector<double> scores;           // S(d_new, d_i) for every existing descriptor
};

/// Replace-or-append: when the best similarity reaches gamma the argmax
/// (lowest index on ties) is replaced in place, otherwise d_new is appended.
UserProfile update_profile(const UserProfile& profile, const ProfileDescriptor& d_new,
                           const SimilarityConfig& cfg, providers::Embedder& embedder,
                           UpdateOutcome* outcome = nullptr);

inline constexpr std::string_view kEmptyProfileLine = "No profile information available.";

std::string render_profile_prompt(const UserProfile& profile);

json to_json(const UserProfile& p);
UserProfile profile_from_json(const json& j);

/// One JSON file per user under `dir`, replaced atomically on write. Updates
/// for the same user are serialized.
class ProfileStore {
 public:
  explicit ProfileStore(std::filesystem::path dir);

  /// Missing file yields an empty profile; a corrupt file throws Storage.
  UserProfile load(const std::string& user_id) const;
  void save(const UserProfile& profile);

  UserProfile update(const std::string& user_id, const ProfileDescriptor& d_new,
                     const SimilarityConfig& cfg, providers::Embedder& embedder,
                     UpdateOutcome* outcome = nullptr);

  std::filesystem::path path_for(const std::string& user_id) const;

 private:
  std::mutex& user_mutex(const std::string& user_id) const;

  std::filesystem::path dir_;
  mutable std::mutex map_mu_;
  mutable std::map<std::string, std::unique_ptr<std::mutex>> user_mu_;
};

}  // namespace acn::profile
