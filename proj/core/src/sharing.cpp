#include "dske/sharing.hpp"

#include <algorithm>
#include <numeric>

#include "dske/error.hpp"

namespace dske {

void SharingParams::validate() const {
  require(k >= 1, "threshold k must be >= 1");
  require(k <= n, "threshold k must not exceed n");
  require(m >= 1, "secret length m must be >= 1");
  require(field_bits(tag_field) >= field_bits(share_field), "tag field must be at least as wide as the sharing field");
  // n distinct nonzero x coordinates must exist
  if (share_field == FieldId::gf8) require(n < 256, "n must be below |F| = 256");
}

namespace {

std::vector<FieldElement> hub_points(std::size_t first, std::size_t last, FieldId f) {
  std::vector<FieldElement> xs;
  for (std::size_t i = first; i <= last; ++i) xs.push_back(encode_index(i, f));
  return xs;
}

// Inverse of the Vandermonde matrix V[i][r] = xs[i]^r by Gauss-Jordan.
std::vector<std::vector<FieldElement>> vandermonde_inverse(std::span<const FieldElement> xs) {
  const std::size_t k = xs.size();
  const FieldId f = xs.front().field();
  std::vector<std::vector<FieldElement>> a(k, std::vector<FieldElement>(2 * k, FieldElement::zero(f)));
  for (std::size_t i = 0; i < k; ++i) {
    FieldElement p = FieldElement::one(f);
    for (std::size_t r = 0; r < k; ++r) {
      a[i][r] = p;
      p = mul(p, xs[i]);
    }
    a[i][k + i] = FieldElement::one(f);
  }
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t pivot = col;
    while (pivot < k && a[pivot][col].is_zero()) ++pivot;
    if (pivot == k) fail(Errc::duplicate_coordinate, "singular Vandermonde system");
    std::swap(a[col], a[pivot]);
    const FieldElement scale_by = inv(a[col][col]);
    for (auto& e : a[col]) e = mul(e, scale_by);
    for (std::size_t row = 0; row < k; ++row) {
      if (row == col || a[row][col].is_zero()) continue;
      const FieldElement factor = a[row][col];
      for (std::size_t j = 0; j < 2 * k; ++j) a[row][j] = add(a[row][j], mul(factor, a[col][j]));
    }
  }
  std::vector<std::vector<FieldElement>> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i].assign(a[i].begin() + static_cast<std::ptrdiff_t>(k), a[i].end());
  return out;
}

// coefficient vectors c_0..c_{k-1}, one ElementVector per power of x
std::vector<ElementVector> derive_coefficients(std::span<const FieldElement> xs,
                                               std::span<const ElementVector* const> ys) {
  const auto winv = vandermonde_inverse(xs);
  const std::size_t k = xs.size();
  std::vector<ElementVector> coeffs(k, ElementVector(ys.front()->field(), ys.front()->size()));
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t i = 0; i < k; ++i) axpy(coeffs[r], winv[r][i], *ys[i]);
  return coeffs;
}

ElementVector evaluate_coefficients(const std::vector<ElementVector>& coeffs, const FieldElement& t) {
  if (t.is_zero()) return coeffs.front();
  ElementVector out = coeffs.front();
  FieldElement p = t;
  for (std::size_t r = 1; r < coeffs.size(); ++r) {
    axpy(out, p, coeffs[r]);
    p = mul(p, t);
  }
  return out;
}

ElementVector evaluate_lagrange(std::span<const FieldElement> xs, std::span<const ElementVector* const> ys,
                                const FieldElement& t) {
  const auto w = lagrange_weights(xs, t);
  ElementVector out(ys.front()->field(), ys.front()->size());
  for (std::size_t i = 0; i < xs.size(); ++i) axpy(out, w[i], *ys[i]);
  return out;
}

void check_distinct(std::span<const FieldElement> xs) {
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = i + 1; j < xs.size(); ++j)
      if (xs[i] == xs[j]) fail(Errc::duplicate_coordinate, "repeated x coordinate");
}

}  // namespace

std::vector<FieldElement> lagrange_weights(std::span<const FieldElement> xs, const FieldElement& target) {
  require(!xs.empty(), "no interpolation points");
  check_distinct(xs);
  const FieldId f = xs.front().field();
  std::vector<FieldElement> w;
  w.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    FieldElement num = FieldElement::one(f);
    FieldElement den = FieldElement::one(f);
    for (std::size_t j = 0; j < xs.size(); ++j) {
      if (j == i) continue;
      num = mul(num, sub(target, xs[j]));
      den = mul(den, sub(xs[i], xs[j]));
    }
    w.push_back(mul(num, inv(den)));
  }
  return w;
}

GeneratedShares generate_shares(std::span<const ElementVector> anchors, const SharingParams& params,
                                Interpolation method) {
  params.validate();
  if (anchors.size() != params.k) fail(Errc::contract_violation, "expected exactly k anchors");
  for (const auto& a : anchors) {
    if (a.field() != params.share_field || a.size() != params.payload_elements())
      fail(Errc::contract_violation, "anchor has wrong field or length");
  }

  const FieldId f = params.share_field;
  const auto xs = hub_points(1, params.k, f);
  std::vector<const ElementVector*> ys;
  for (const auto& a : anchors) ys.push_back(&a);

  GeneratedShares out;
  out.shares.reserve(params.n);
  for (std::size_t i = 0; i < params.k; ++i) out.shares.push_back({i + 1, xs[i], anchors[i]});

  const FieldElement x0 = encode_index(0, f);
  if (method == Interpolation::coefficients) {
    auto coeffs = derive_coefficients(xs, ys);
    for (std::size_t i = params.k + 1; i <= params.n; ++i) {
      const FieldElement xi = encode_index(i, f);
      out.shares.push_back({i, xi, evaluate_coefficients(coeffs, xi)});
    }
    out.secret_block = std::move(coeffs.front());  // value at x_0 = 0
  } else {
    for (std::size_t i = params.k + 1; i <= params.n; ++i) {
      const FieldElement xi = encode_index(i, f);
      out.shares.push_back({i, xi, evaluate_lagrange(xs, ys, xi)});
    }
    out.secret_block = evaluate_lagrange(xs, ys, x0);
  }
  return out;
}

namespace {

ElementVector reconstruct_from(std::span<const ShareBundle* const> points, Interpolation method) {
  require(!points.empty(), "no shares to reconstruct from");
  std::vector<FieldElement> xs;
  std::vector<const ElementVector*> ys;
  for (const auto* p : points) {
    require(!p->x.is_zero(), "share at the secret's evaluation point");
    require(p->payload.field() == p->x.field(), "share payload and x in different fields");
    require(p->payload.size() == points.front()->payload.size(), "share payload length mismatch");
    xs.push_back(p->x);
    ys.push_back(&p->payload);
  }
  check_distinct(xs);
  if (method == Interpolation::coefficients) return std::move(derive_coefficients(xs, ys).front());
  return evaluate_lagrange(xs, ys, FieldElement::zero(xs.front().field()));
}

}  // namespace

ElementVector reconstruct(std::span<const ShareBundle> points, Interpolation method) {
  std::vector<const ShareBundle*> ptrs;
  for (const auto& p : points) ptrs.push_back(&p);
  return reconstruct_from(ptrs, method);
}

SecretCandidate split_candidate(const ElementVector& secret_block, const FieldElement& tag,
                                const SharingParams& params) {
  require(secret_block.size() == params.payload_elements(), "secret block has wrong length");
  const auto u = pack_tag_elements(secret_block.slice(0, params.key_elements()), params.tag_field);
  return SecretCandidate{SecretTagKey{u[0], u[1], u[2]}, secret_block.slice(params.key_elements(), params.m), tag};
}

bool validate_candidate(const SecretCandidate& candidate, const SharingParams& params) {
  if (candidate.tag.field() != params.tag_field) return false;
  return secret_tag(candidate.u, candidate.secret) == candidate.tag;
}

void for_each_subset(std::size_t count, std::size_t k,
                     const std::function<bool(std::span<const std::size_t>)>& visit) {
  if (k == 0 || k > count) return;
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    if (!visit(idx)) return;
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == count - k + (i - 1)) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

namespace {

std::vector<const ShareBundle*> sorted_by_hub(std::span<const ShareBundle> bundles) {
  std::vector<const ShareBundle*> sorted;
  for (const auto& b : bundles) sorted.push_back(&b);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const ShareBundle* a, const ShareBundle* b) { return a->hub_index < b->hub_index; });
  return sorted;
}

// Calls visit(candidate) for each distinct reconstruction until it returns false.
void enumerate_candidates(std::span<const ShareBundle> bundles, const FieldElement& tag,
                          const SharingParams& params, Interpolation method,
                          const std::function<bool(SecretCandidate&&)>& visit) {
  if (bundles.size() < params.k)
    fail(Errc::insufficient_shares, "have " + std::to_string(bundles.size()) + " shares, need " +
                                        std::to_string(params.k));
  const auto sorted = sorted_by_hub(bundles);
  std::vector<ElementVector> seen;
  std::vector<const ShareBundle*> subset(params.k);
  for_each_subset(sorted.size(), params.k, [&](std::span<const std::size_t> idx) {
    for (std::size_t i = 0; i < idx.size(); ++i) subset[i] = sorted[idx[i]];
    ElementVector y0 = reconstruct_from(subset, method);
    if (std::find(seen.begin(), seen.end(), y0) != seen.end()) return true;
    seen.push_back(std::move(y0));
    return visit(split_candidate(seen.back(), tag, params));
  });
}

}  // namespace

std::vector<SecretCandidate> candidate_secrets(std::span<const ShareBundle> bundles, const FieldElement& tag,
                                               const SharingParams& params, Interpolation method) {
  std::vector<SecretCandidate> out;
  enumerate_candidates(bundles, tag, params, method, [&](SecretCandidate&& c) {
    out.push_back(std::move(c));
    return true;
  });
  return out;
}

std::optional<SecretCandidate> first_valid_candidate(std::span<const ShareBundle> bundles, const FieldElement& tag,
                                                     const SharingParams& params, Interpolation method) {
  std::optional<SecretCandidate> found;
  enumerate_candidates(bundles, tag, params, method, [&](SecretCandidate&& c) {
    if (!validate_candidate(c, params)) return true;
    found = std::move(c);
    return false;
  });
  return found;
}

}  // namespace dske
