#pragma once

#include "bsaction/integer.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bsaction {

// Parameters of BS(m,n) = <b, t | t b^m t^-1 = b^n>.
class GroupParams {
 public:
  GroupParams(Int m, Int n) : m_(std::move(m)), n_(std::move(n)) {
    if (abs(m_) < 2 || abs(n_) < 2) {
      throw std::invalid_argument("BS(m,n) needs |m|,|n| >= 2, got (" + m_.str() + "," + n_.str() + ")");
    }
    if (!m_.fits_int64() || !n_.fits_int64()) throw std::invalid_argument("group parameters must fit in 64 bits");
    auto fm = factorize(m_), fn = factorize(n_);
    for (const auto& pp : fm) primes_.push_back({pp.prime, pp.exponent, 0});
    for (const auto& pp : fn) {
      bool found = false;
      for (auto& e : primes_) {
        if (e.prime == pp.prime) {
          e.vn = pp.exponent;
          found = true;
        }
      }
      if (!found) primes_.push_back({pp.prime, 0, pp.exponent});
    }
    std::sort(primes_.begin(), primes_.end(), [](const auto& a, const auto& b) { return a.prime < b.prime; });
  }

  const Int& m() const { return m_; }
  const Int& n() const { return n_; }
  Int abs_m() const { return abs(m_); }
  Int abs_n() const { return abs(n_); }
  bool balanced() const { return abs(m_) == abs(n_); }

  // Valuations of |m| and |n| at every prime dividing m*n.
  struct PrimeProfile {
    Int prime;
    unsigned vm;
    unsigned vn;
  };
  const std::vector<PrimeProfile>& primes() const { return primes_; }

  friend bool operator==(const GroupParams& a, const GroupParams& b) { return a.m_ == b.m_ && a.n_ == b.n_; }

  std::string str() const { return "BS(" + m_.str() + "," + n_.str() + ")"; }

 private:
  Int m_, n_;
  std::vector<PrimeProfile> primes_;
};

enum class Letter { b, t };

struct Syllable {
  Letter letter;
  Int exp;  // nonzero inside a Word
  friend bool operator==(const Syllable&, const Syllable&) = default;
};

// A free word in b and t, kept freely reduced at the syllable level
// (adjacent syllables on the same letter are merged).
class Word {
 public:
  Word() = default;

  static Word letter(Letter l, Int e = 1) {
    Word w;
    w.append(l, std::move(e));
    return w;
  }

  void append(Letter l, const Int& e) {
    if (e.is_zero()) return;
    if (!syl_.empty() && syl_.back().letter == l) {
      syl_.back().exp += e;
      if (syl_.back().exp.is_zero()) syl_.pop_back();
      return;
    }
    syl_.push_back({l, e});
  }
  void append(const Word& w) {
    for (const auto& s : w.syl_) append(s.letter, s.exp);
  }

  Word inverse() const {
    Word w;
    for (auto it = syl_.rbegin(); it != syl_.rend(); ++it) w.append(it->letter, -it->exp);
    return w;
  }

  const std::vector<Syllable>& syllables() const { return syl_; }
  bool empty() const { return syl_.empty(); }

  // Number of letters b^{+-1}, t^{+-1}.
  Int length() const {
    Int s = 0;
    for (const auto& x : syl_) s += abs(x.exp);
    return s;
  }

  std::string str() const {
    if (syl_.empty()) return "1";
    std::string out;
    for (const auto& s : syl_) {
      if (!out.empty()) out += '*';
      out += s.letter == Letter::b ? 'b' : 't';
      if (s.exp != 1) out += "^" + s.exp.str();
    }
    return out;
  }

  friend bool operator==(const Word&, const Word&) = default;

  friend Word operator*(Word a, const Word& b) {
    a.append(b);
    return a;
  }

 private:
  std::vector<Syllable> syl_;
};

// Parses either the letter form ("tbTB", capitals are inverses) or the
// compact form ("b^3*t^-1*b"), or any mix. '*' and blanks are separators,
// "1" or "e" stand for the identity.
inline Word parse_word(std::string_view text) {
  Word w;
  std::size_t i = 0;
  auto fail = [&](const std::string& why) {
    throw std::invalid_argument("cannot parse word '" + std::string(text) + "' at position " + std::to_string(i) +
                                ": " + why);
  };
  while (i < text.size()) {
    char c = text[i];
    if (c == '*' || std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '1' || c == 'e') {
      ++i;
      continue;
    }
    Letter l;
    int sign = 1;
    switch (c) {
      case 'b': l = Letter::b; break;
      case 'B': l = Letter::b; sign = -1; break;
      case 't': l = Letter::t; break;
      case 'T': l = Letter::t; sign = -1; break;
      default: fail(std::string("unexpected character '") + c + "'");
    }
    ++i;
    Int e = 1;
    if (i < text.size() && text[i] == '^') {
      ++i;
      bool paren = i < text.size() && text[i] == '(';
      if (paren) ++i;
      std::size_t start = i;
      if (i < text.size() && (text[i] == '-' || text[i] == '+')) ++i;
      while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
      if (i == start || !std::isdigit(static_cast<unsigned char>(text[i - 1]))) fail("missing exponent");
      e = Int::parse(text.substr(start, i - start));
      if (paren) {
        if (i >= text.size() || text[i] != ')') fail("missing ')'");
        ++i;
      }
    }
    w.append(l, sign * e);
  }
  return w;
}

// Britton normal form b^{k1} t^{e1} ... b^{kd} t^{ed} b^{k}: each e_i = +-1,
// k_i in [0,|n|) before t and in [0,|m|) before t^-1, and no t^e b^0 t^-e.
struct NormalForm {
  struct Step {
    Int k;
    int eps;  // +1 or -1
    friend bool operator==(const Step&, const Step&) = default;
  };
  std::vector<Step> steps;
  Int tail = 0;

  bool is_identity() const { return steps.empty() && tail.is_zero(); }
  std::size_t t_length() const { return steps.size(); }

  Word to_word() const {
    Word w;
    for (const auto& s : steps) {
      w.append(Letter::b, s.k);
      w.append(Letter::t, s.eps);
    }
    w.append(Letter::b, tail);
    return w;
  }

  std::string str() const { return to_word().str(); }

  friend bool operator==(const NormalForm&, const NormalForm&) = default;
};

// Incremental right multiplication by generators, maintaining the normal form.
class NormalFormBuilder {
 public:
  explicit NormalFormBuilder(const GroupParams& params) : params_(params) {}
  NormalFormBuilder(const GroupParams& params, NormalForm start) : params_(params), nf_(std::move(start)) {}

  void mul_b(const Int& k) { nf_.tail += k; }

  void mul_t(int eps) {
    const Int& m = params_.m();
    const Int& n = params_.n();
    if (!nf_.steps.empty() && nf_.steps.back().eps == -eps) {
      // t b^{mj} t^-1 = b^{nj} and t^-1 b^{nj} t = b^{mj}
      const Int& d = eps == -1 ? m : n;
      if (divides(d, nf_.tail)) {
        Int j = nf_.tail / d;
        Int carried = eps == -1 ? n * j : m * j;
        nf_.tail = nf_.steps.back().k + carried;
        nf_.steps.pop_back();
        return;
      }
    }
    // b^{qn+r} t = b^r t b^{qm} and b^{qm+r} t^-1 = b^r t^-1 b^{qn}
    const Int& d = eps == 1 ? n : m;
    auto [q, r] = euclid_divmod(nf_.tail, d);
    nf_.steps.push_back({std::move(r), eps});
    nf_.tail = eps == 1 ? q * m : q * n;
  }

  void mul(const Syllable& s) {
    if (s.letter == Letter::b) {
      mul_b(s.exp);
      return;
    }
    int eps = s.exp.sign();
    for (Int i = abs(s.exp); i.sign() > 0; --i) mul_t(eps);
  }

  void mul(const Word& w) {
    for (const auto& s : w.syllables()) mul(s);
  }

  const NormalForm& result() const& { return nf_; }
  NormalForm result() && { return std::move(nf_); }

 private:
  const GroupParams& params_;
  NormalForm nf_;
};

inline NormalForm britton_reduce(const GroupParams& params, const Word& w) {
  NormalFormBuilder nb(params);
  nb.mul(w);
  return std::move(nb).result();
}

inline NormalForm multiply(const GroupParams& params, const NormalForm& u, const NormalForm& v) {
  NormalFormBuilder nb(params, u);
  nb.mul(v.to_word());
  return std::move(nb).result();
}

inline NormalForm invert(const GroupParams& params, const NormalForm& u) {
  return britton_reduce(params, u.to_word().inverse());
}

inline bool is_identity(const GroupParams& params, const Word& w) { return britton_reduce(params, w).is_identity(); }

// Checks the structural conditions of a normal form.
inline bool is_normal_form(const GroupParams& params, const NormalForm& nf) {
  for (std::size_t i = 0; i < nf.steps.size(); ++i) {
    const auto& s = nf.steps[i];
    if (s.eps != 1 && s.eps != -1) return false;
    const Int bound = s.eps == 1 ? params.abs_n() : params.abs_m();
    if (s.k.sign() < 0 || s.k >= bound) return false;
    if (i > 0 && s.k.is_zero() && nf.steps[i - 1].eps == -s.eps) return false;
  }
  return true;
}

}  // namespace bsaction
