#pragma once

// (n,k)-threshold sharing run as parallel coordinate schemes over one payload
// vector. Payload layout: u (secret tag key, 3 tag-field elements) || S (m
// sharing-field elements). x_0 = 0 is the secret point; hub i sits at
// x_i = encode_index(i).

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "dske/field.hpp"
#include "dske/hashing.hpp"

namespace dske {

struct SharingParams {
  std::size_t n = 1;
  std::size_t k = 1;
  std::size_t m = 1;
  FieldId share_field = FieldId::gf128;
  FieldId tag_field = FieldId::gf128;

  // Throws Errc::contract_violation when the invariants do not hold.
  void validate() const;

  // Sharing-field elements per tag-field element.
  std::size_t tag_ratio() const noexcept { return field_bits(tag_field) / field_bits(share_field); }
  std::size_t key_elements() const noexcept { return 3 * tag_ratio(); }
  std::size_t payload_elements() const noexcept { return key_elements() + m; }
  std::size_t mac_key_elements() const noexcept { return 2 * tag_ratio(); }
  // PSRD consumed per hub leg per session: R (payload) then v (MAC key).
  std::size_t psrd_per_session() const noexcept { return payload_elements() + mac_key_elements(); }

  friend bool operator==(const SharingParams&, const SharingParams&) = default;
};

// How polynomial evaluation is organised.
//  lagrange:      per target point, k weights then sum_i w_i Y_i (O(k) per coordinate)
//  coefficients:  invert the k x k Vandermonde system once, derive all k
//                 coefficients per coordinate (O(k^2)), then evaluate targets
enum class Interpolation { lagrange, coefficients };

struct ShareBundle {
  std::size_t hub_index = 0;
  FieldElement x;
  ElementVector payload;
};

struct GeneratedShares {
  ElementVector secret_block;  // Y_0 = u || S
  std::vector<ShareBundle> shares;
};

// anchors[i] becomes the share of hub i+1; shares k+1..n and Y_0 are solved.
GeneratedShares generate_shares(std::span<const ElementVector> anchors, const SharingParams& params,
                                Interpolation method = Interpolation::lagrange);

// Evaluates the interpolating polynomial at x_0 = 0.
// Throws Errc::duplicate_coordinate on repeated x, contract violation on x == 0.
ElementVector reconstruct(std::span<const ShareBundle> points,
                          Interpolation method = Interpolation::lagrange);

// Lagrange weights for evaluating at `target` from the given x coordinates.
std::vector<FieldElement> lagrange_weights(std::span<const FieldElement> xs, const FieldElement& target);

struct SecretCandidate {
  SecretTagKey u;
  ElementVector secret;
  FieldElement tag;  // o, as claimed by the messages
};

SecretCandidate split_candidate(const ElementVector& secret_block, const FieldElement& tag,
                                const SharingParams& params);
bool validate_candidate(const SecretCandidate& candidate, const SharingParams& params);

// Reconstructs every k-subset in lexicographic order of hub index, drops
// duplicate Y_0 values keeping first-seen order.
// Throws Errc::insufficient_shares when fewer than k bundles are given.
std::vector<SecretCandidate> candidate_secrets(std::span<const ShareBundle> bundles, const FieldElement& tag,
                                               const SharingParams& params,
                                               Interpolation method = Interpolation::lagrange);

// Same enumeration, stopping at the first candidate that validates. Returns
// exactly the first survivor of candidate_secrets() without building the
// whole list.
std::optional<SecretCandidate> first_valid_candidate(std::span<const ShareBundle> bundles, const FieldElement& tag,
                                                     const SharingParams& params,
                                                     Interpolation method = Interpolation::lagrange);

// Visits all k-subsets of {0..count-1} in lexicographic order; stop by returning false.
void for_each_subset(std::size_t count, std::size_t k,
                     const std::function<bool(std::span<const std::size_t>)>& visit);

}  // namespace dske
