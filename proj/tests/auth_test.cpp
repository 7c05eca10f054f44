#include <gtest/gtest.h>

#include <cmath>

#include "qpv/adversary.hpp"
#include "qpv/auth.hpp"
#include "qpv/error.hpp"

using namespace qpv;

namespace {

const TimingConfig kTiming{1.0, 0.1, 0.0};

Codeword random_word(std::size_t n, Rng& rng) {
  Codeword c(n);
  for (auto& b : c) b = rng.bit();
  return c;
}

Embedding pad(Codeword c) {
  c.resize(2 * c.size() + 0, kDagger);
  return c;
}

}  // namespace

TEST(AuthParams, Validation) {
  EXPECT_NO_THROW((AuthParams{0.01, 8}.validate()));
  EXPECT_THROW((AuthParams{0.0, 8}.validate()), ConfigError);
  EXPECT_THROW((AuthParams{0.014, 8}.validate()), ConfigError);  // (1 - 0.89) / 8 = 0.01375
  EXPECT_THROW((AuthParams{0.01, 0}.validate()), ConfigError);
  const AuthParams d = AuthParams::with_default_q(4);
  EXPECT_NEAR(d.q, 0.006875, 1e-15);
  EXPECT_EQ(d.window(), 16u);
  EXPECT_NEAR(d.threshold(), 8 * 0.006875 * 4, 1e-15);
}

TEST(Wauth, HonestOneAlwaysAccepted) {
  const AuthParams p{0.01, 1};
  Rng rng(1);
  for (int t = 0; t < 300; ++t) {
    auto prover = wauth_prover(1, p);
    const WauthResult r = wauth_round(1, *prover, p, line_layout(), kTiming, AdversaryModel::NoPE, rng);
    ASSERT_TRUE(r.verdict.joint_accept);
    ASSERT_TRUE(r.tag && *r.tag != kBottom);
  }
}

TEST(Wauth, HonestZeroErasesAtRateQ) {
  const AuthParams p{0.05, 1, 0.5};
  Rng rng(2);
  const int n = 6000;
  int bottoms = 0;
  for (int t = 0; t < n; ++t) {
    auto prover = wauth_prover(0, p);
    const WauthResult r = wauth_round(0, *prover, p, line_layout(), kTiming, AdversaryModel::NoPE, rng);
    ASSERT_TRUE(r.verdict.joint_accept);
    bottoms += *r.tag == kBottom ? 1 : 0;
  }
  const double sigma = std::sqrt(0.05 * 0.95 / n);
  EXPECT_NEAR(bottoms / double(n), 0.05, 3 * sigma);
}

TEST(Wauth, ImpersonationBoundedByPvSoundness) {
  const AuthParams p{0.01, 1};
  Rng rng(3);
  const int n = 6000;
  int ok = 0;
  for (int t = 0; t < n; ++t) {
    MeasureAndRelayAttack a(MeasureAndRelayAttack::Basis::Breidbart);
    ok += wauth_round(1, a, p, line_layout(), kTiming, AdversaryModel::NoPE, rng).verdict.joint_accept ? 1 : 0;
  }
  const double f = ok / double(n);
  EXPECT_LE(f, 0.89 + 3 * std::sqrt(0.89 * 0.11 / n));
  EXPECT_NEAR(f, breidbart_success_exact(), 3 * std::sqrt(0.8536 * 0.1464 / n));
}

TEST(Wauth, SubstitutionBound) {
  EXPECT_NEAR(wauth_substitution_bound(0.01, 0.89), 0.9989, 1e-12);
  EXPECT_NEAR(wauth_substitution_bound(1e-12, 0.89), 1.0, 1e-11);
  EXPECT_LT(wauth_substitution_bound(0.5, 0.0), 1.0);
  EXPECT_THROW(wauth_substitution_bound(0.0, 0.5), std::invalid_argument);
  EXPECT_THROW(wauth_substitution_bound(0.5, 1.0), std::invalid_argument);
}

TEST(Wauth, SubstitutionAttackWithinBound) {
  // Prover authenticates 0, verifiers expect 1; erasures are replaced by a
  // guess, which wins half the time.
  const AuthParams p{0.05, 1, 0.5};
  Rng rng(4);
  const int n = 6000;
  int ok = 0;
  for (int t = 0; t < n; ++t) {
    SubstitutionRelay s(0, p, true);
    ok += wauth_round(1, s, p, line_layout(), kTiming, AdversaryModel::NoPE, rng).verdict.joint_accept ? 1 : 0;
  }
  const double f = ok / double(n);
  const double sigma = std::sqrt(0.025 * 0.975 / n);
  EXPECT_NEAR(f, 1.0 - 0.05 / 2, 3 * sigma);
  EXPECT_LE(f, wauth_substitution_bound(0.05, 0.89) + 3 * sigma);
}

TEST(Codes, IsEmbedding) {
  const Codeword c = {1, 0, 1, 0};
  EXPECT_TRUE(is_embedding(pad(c), c));
  EXPECT_TRUE(is_embedding({kDagger, 1, 0, kDagger, 1, 0, kDagger, kDagger}, c));
  Embedding flipped = pad(c);
  flipped[1] = 1;
  EXPECT_FALSE(is_embedding(flipped, c));
  EXPECT_FALSE(is_embedding({1, 0, 1, 0, kDagger, kDagger}, c));               // wrong length
  EXPECT_FALSE(is_embedding({1, 0, 1, kDagger, kDagger, kDagger, kDagger, kDagger}, c));  // too short
  EXPECT_FALSE(is_embedding({1, 0, 1, 0, 2, kDagger, kDagger, kDagger}, c));
  const Codeword alt = {1, 0, 1, 0, 1, 0, 1, 0};
  EXPECT_TRUE(is_embedding(pad(alt), alt));
}

TEST(Codes, BalancedRepetition) {
  const BalancedRepetitionCode code{3, 2};
  EXPECT_EQ(code.length(), 12u);
  EXPECT_EQ(code.encode({0, 1}), (Codeword{0, 0, 0, 1, 1, 1, 1, 1, 1, 0, 0, 0}));
  const auto all = code.codewords();
  ASSERT_EQ(all.size(), 4u);
  for (const auto& w : all) {
    int ones = 0;
    for (int b : w) ones += b;
    EXPECT_EQ(ones, 6);
  }
  EXPECT_THROW(code.encode({0}), std::invalid_argument);
}

TEST(Domination, SearchAgreesWithEnumeration) {
  for (std::size_t ell = 1; ell <= 3; ++ell) {
    for (std::size_t mu = 1; ell * mu <= 3; ++mu) {
      const auto words = BalancedRepetitionCode{ell, mu}.codewords();
      for (std::size_t lambda = 1; lambda <= 3; ++lambda) {
        for (const auto& a : words) {
          for (const auto& b : words) {
            const auto ex = dominates_exhaustive(a, b, lambda);
            const auto se = dominates_search(a, b, lambda, 10'000'000);
            ASSERT_EQ(ex.verdict, se.verdict) << "ell=" << ell << " mu=" << mu << " lambda=" << lambda;
          }
        }
      }
    }
  }
  const auto w8 = BalancedRepetitionCode{4, 1}.codewords();
  EXPECT_EQ(dominates_exhaustive(w8[0], w8[1], 2).verdict, dominates_search(w8[0], w8[1], 2, 10'000'000).verdict);
  Rng rng(5);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 1 + rng.below(6);
    const Codeword a = random_word(n, rng), b = random_word(n, rng);
    const std::size_t lambda = 1 + rng.below(2);
    ASSERT_EQ(dominates_exhaustive(a, b, lambda).verdict, dominates_search(a, b, lambda, 10'000'000).verdict);
  }
}

TEST(Domination, WitnessesAreGenuine) {
  Rng rng(6);
  int found = 0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng.below(5);
    const Codeword a = random_word(n, rng), b = random_word(n, rng);
    for (const auto& r : {dominates_exhaustive(a, b, 2), dominates_search(a, b, 2, 10'000'000)}) {
      if (r.verdict != DominationVerdict::Counterexample) continue;
      ++found;
      ASSERT_TRUE(r.witness);
      EXPECT_TRUE(is_embedding(r.witness->first, a));
      EXPECT_TRUE(is_embedding(r.witness->second, b));
      EXPECT_FALSE(dominance_holds(r.witness->first, r.witness->second, 2));
    }
  }
  EXPECT_GT(found, 0);
}

TEST(Domination, BalancedRepetitionInstances) {
  EXPECT_EQ(code_dominates(BalancedRepetitionCode{4, 1}.codewords(), 1).verdict, DominationVerdict::Dominates);
  EXPECT_EQ(code_dominates(BalancedRepetitionCode{8, 1}.codewords(), 2).verdict, DominationVerdict::Dominates);
  EXPECT_EQ(code_dominates(BalancedRepetitionCode{4, 2}.codewords(), 1).verdict, DominationVerdict::Dominates);
  // c = 0011, c' = 1100
  EXPECT_EQ(dominates({0, 0, 1, 1}, {1, 1, 0, 0}, 1).verdict, DominationVerdict::Dominates);
}

TEST(Domination, AlternatingCode) {
  const Codeword c = {1, 0, 1, 0, 1, 0, 1, 0};
  const Codeword cp = {0, 1, 0, 1, 0, 1, 0, 1};
  // Shift c' right by one, pad both.
  const Embedding e = pad(c);
  Embedding ep(16, kDagger);
  for (std::size_t i = 0; i < cp.size(); ++i) ep[i + 1] = cp[i];
  ASSERT_TRUE(is_embedding(e, c));
  ASSERT_TRUE(is_embedding(ep, cp));
  EXPECT_EQ(hard_ones(e, ep), 1u);
  EXPECT_EQ(impersonated(e, ep), 1u);
  EXPECT_TRUE(dominance_holds(e, ep, 1));
  EXPECT_FALSE(dominance_holds(e, ep, 2));  // N / 4 = 2

  EXPECT_EQ(dominates(c, cp, 1).verdict, DominationVerdict::Dominates);
  const auto r = dominates(c, cp, 2);
  ASSERT_EQ(r.verdict, DominationVerdict::Counterexample);
  EXPECT_FALSE(dominance_holds(r.witness->first, r.witness->second, 2));
  EXPECT_EQ(dominates_search(c, cp, 2, 1'000'000).verdict, DominationVerdict::Counterexample);
}

TEST(Domination, NeverDominatesItself) {
  const Codeword c = {0, 0, 1, 1, 1, 0};
  const Embedding e = pad(c);
  EXPECT_FALSE(dominance_holds(e, e, 1));
  for (std::size_t lambda = 1; lambda <= 3; ++lambda) {
    EXPECT_EQ(dominates(c, c, lambda).verdict, DominationVerdict::Counterexample);
    EXPECT_EQ(dominates_search(c, c, lambda, 1'000'000).verdict, DominationVerdict::Counterexample);
  }
}

TEST(Domination, BudgetIsReported) {
  const auto words = BalancedRepetitionCode{8, 1}.codewords();
  const auto r = dominates_search(words[0], words[1], 2, 10);
  EXPECT_EQ(r.verdict, DominationVerdict::BudgetExhausted);
  EXPECT_GT(r.explored, 10u);
  EXPECT_THROW(dominates({0, 1}, {0, 1, 1}, 1), std::invalid_argument);
}

TEST(Auth, WindowCountMatchesRecount) {
  Rng rng(7);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 4 + rng.below(40);
    const std::size_t lambda = 1 + rng.below(4);
    const Codeword c = random_word(n, rng);
    std::vector<int> tags(n);
    for (auto& x : tags) x = static_cast<int>(rng.below(3));
    for (std::size_t j = 1; j <= n; ++j) {
      std::size_t naive = 0;
      for (std::size_t i = 1; i <= n; ++i) {
        const bool inside = i <= j && i + 4 * lambda >= j;
        if (inside && c[i - 1] == 0 && tags[i - 1] == kBottom) ++naive;
      }
      ASSERT_EQ(n_bottom(c, tags, j, lambda), naive);
    }
  }
}

TEST(Auth, HonestRunAccepts) {
  const AuthParams p{1e-6, 1};
  const BalancedRepetitionCode code{4, 2};
  Rng rng(8);
  for (int t = 0; t < 20; ++t) {
    const std::vector<int> m = {rng.bit(), rng.bit()};
    const AuthResult r = auth_message(m, m, code, p, aligned_schedule(code.length()), nullptr, line_layout(), kTiming, rng);
    ASSERT_TRUE(r.accept) << r.reason;
    EXPECT_EQ(r.wauth_rounds, code.length());
    EXPECT_EQ(r.e, r.e_prime);
  }
}

TEST(Auth, ErasuresInWindowReject) {
  // At lambda = 1 and q = 0.01 the threshold is 0.08, so one erasure on a
  // 0-bit inside a checked window rejects.
  const AuthParams p{0.01, 1};
  const BalancedRepetitionCode code{4, 1};
  Rng rng(9);
  int rejects = 0, bottoms = 0;
  for (int t = 0; t < 3000; ++t) {
    const AuthResult r = auth_message({1}, {1}, code, p, aligned_schedule(8), nullptr, line_layout(), kTiming, rng);
    int b = 0;
    for (std::size_t i = 0; i < 8; ++i) b += r.tags[i] == kBottom ? 1 : 0;
    bottoms += b > 0 ? 1 : 0;
    rejects += r.accept ? 0 : 1;
    if (!r.accept) EXPECT_EQ(r.reason, "too many erasures in window");
  }
  EXPECT_EQ(rejects, bottoms);
  EXPECT_GT(rejects, 0);
}

TEST(Auth, ScheduleEmbeddingsAreValid) {
  const AuthParams p{0.01, 1};
  const BalancedRepetitionCode code{4, 1};
  DesyncAdversary adv;
  Rng rng(10);
  for (int t = 0; t < 60; ++t) {
    const Schedule s = random_schedule(code.length(), rng);
    const std::vector<int> m = {rng.bit()}, mp = {rng.bit()};
    const AuthResult r = auth_message(m, mp, code, p, s, &adv, line_layout(), kTiming, rng);
    EXPECT_TRUE(is_embedding(r.e, code.encode(m)));
    EXPECT_TRUE(is_embedding(r.e_prime, code.encode(mp)));
    EXPECT_TRUE(r.completed);
  }
  // A truncated schedule leaves the prover fast-forwarded and the verifiers
  // unfinished.
  const AuthResult r = auth_message({0}, {1}, code, p, {AuthAction::Impersonate}, &adv, line_layout(), kTiming, rng);
  EXPECT_FALSE(r.completed);
  EXPECT_FALSE(r.accept);
  EXPECT_TRUE(is_embedding(r.e, code.encode({0})));
}

TEST(Auth, ScheduleErrors) {
  const AuthParams p{0.01, 1};
  const Codeword c = {0, 1};
  DesyncAdversary adv;
  Rng rng(11);
  const Schedule over(3, AuthAction::Impersonate);
  EXPECT_THROW(auth_run(c, c, p, over, &adv, line_layout(), kTiming, rng), std::invalid_argument);
  EXPECT_THROW(auth_run(c, c, p, {AuthAction::Impersonate}, nullptr, line_layout(), kTiming, rng),
               std::invalid_argument);
  EXPECT_THROW(auth_message({0}, {1}, BalancedRepetitionCode{4, 1}, AuthParams{0.01, 2}, aligned_schedule(8), nullptr,
                            line_layout(), kTiming, rng),
               ConfigError);
}

TEST(Auth, DesyncAttackRate) {
  // First bit impersonated (Breidbart), then the prover runs one bit behind:
  // ell - 1 erasures must be guessed and one honest erasure at ell + 1 falls
  // in a checked window.
  const std::size_t lambda = 4, ell = 4 * lambda;
  const AuthParams p{0.01, lambda};
  const BalancedRepetitionCode code{ell, 1};
  DesyncAdversary adv;
  const int n = 2000;
  int ok = 0;
  for (int t = 0; t < n; ++t) {
    Rng rng = Rng::derive(12, t);
    ok += auth_message({0}, {1}, code, p, desync_schedule(code.length()), &adv, line_layout(), kTiming, rng).accept;
  }
  const double predicted = breidbart_success_exact() * std::pow(1 - 0.005, ell - 1) * 0.99;
  EXPECT_NEAR(ok / double(n), predicted, 3 * std::sqrt(predicted * (1 - predicted) / n));
}

TEST(KeyExchange, HonestKeysAgree) {
  const KeyExchangeParams kp;
  for (int t = 0; t < 20; ++t) {
    Rng rng = Rng::derive(13, t);
    const KeyExchangeResult k = key_exchange(line_layout(), kTiming, kp, false, rng);
    ASSERT_TRUE(k.auth_accept);
    EXPECT_FALSE(k.verifier_key.empty());
    EXPECT_EQ(k.verifier_key, k.prover_key);
    EXPECT_EQ(k.sifted, k.verifier_key.size());
    EXPECT_NEAR(double(k.sifted), 128.0, 3 * 8.0 + 1);
    EXPECT_EQ(k.wauth_rounds, 2 * kp.ell * 2 * kp.raw_rounds);
  }
}

TEST(KeyExchange, TamperedEchoIsAuthenticatedAsSent) {
  // The flip changes the prover's echo; with q this small the erasure tags
  // that could reveal it essentially never occur.
  KeyExchangeParams kp;
  kp.raw_rounds = 32;
  Rng rng(14);
  const KeyExchangeResult k = key_exchange(line_layout(), kTiming, kp, true, rng);
  ASSERT_TRUE(k.tampered_index);
  EXPECT_TRUE(k.auth_accept);
}

TEST(KeyExchange, TamperDetectedWithLargeQ) {
  // With q near its ceiling and lambda = 1 erasures are frequent enough that
  // honest runs fail too, but the flipped block adds ell chances of a
  // rejected erasure.
  KeyExchangeParams kp;
  kp.raw_rounds = 8;
  kp.auth = AuthParams{0.013, 1};
  int empty = 0;
  for (int t = 0; t < 300; ++t) {
    Rng rng = Rng::derive(15, t);
    empty += key_exchange(line_layout(), kTiming, kp, true, rng).verifier_key.empty() ? 1 : 0;
  }
  EXPECT_GT(empty, 0);
}

TEST(KeyExchange, Hex) {
  EXPECT_EQ(to_hex({1, 0, 1, 0, 1, 1, 1, 1}), "af");
  EXPECT_EQ(to_hex({1}), "8");
  EXPECT_EQ(to_hex({}), "");
}
