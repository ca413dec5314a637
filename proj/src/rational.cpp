#include "lipshadow/rational.hpp"

#include <cctype>
#include <cstdlib>
#include <sstream>

#include "lipshadow/errors.hpp"

namespace lipshadow {

namespace {

bool is_integer_token(const std::string& s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '+' || s[0] == '-') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

// Base-10 parse; the mpz string constructor would read leading zeros as
// octal, and it rejects an explicit plus sign.
mpz_class parse_mpz(const std::string& s) {
  const std::string t = s[0] == '+' ? s.substr(1) : s;
  return mpz_class(t, 10);
}

// Exact decimal -> rational: mantissa / 10^(frac digits) * 10^exponent.
Rational parse_decimal(const std::string& s) {
  std::size_t epos = s.find_first_of("eE");
  std::string mant = epos == std::string::npos ? s : s.substr(0, epos);
  long expo = 0;
  if (epos != std::string::npos) {
    const std::string etok = s.substr(epos + 1);
    if (!is_integer_token(etok)) throw ParseError("bad exponent in number: " + s);
    expo = std::strtol(etok.c_str(), nullptr, 10);
  }
  std::size_t dot = mant.find('.');
  std::string digits = mant;
  long frac = 0;
  if (dot != std::string::npos) {
    digits = mant.substr(0, dot) + mant.substr(dot + 1);
    frac = static_cast<long>(mant.size() - dot - 1);
  }
  if (!is_integer_token(digits)) throw ParseError("malformed number: " + s);
  mpz_class num = parse_mpz(digits);
  mpz_class den = 1;
  long net = expo - frac;
  mpz_class ten = 10;
  mpz_class scale;
  mpz_pow_ui(scale.get_mpz_t(), ten.get_mpz_t(), static_cast<unsigned long>(net < 0 ? -net : net));
  Rational r = net < 0 ? Rational(num, scale) : Rational(num * scale, den);
  r.canonicalize();
  return r;
}

}  // namespace

Rational parse_rational(const std::string& text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  if (s.empty()) throw ParseError("empty number");
  std::size_t slash = s.find('/');
  if (slash != std::string::npos) {
    const std::string p = s.substr(0, slash), q = s.substr(slash + 1);
    if (!is_integer_token(p) || !is_integer_token(q))
      throw ParseError("malformed rational: " + text);
    mpz_class num = parse_mpz(p), den = parse_mpz(q);
    if (den == 0) throw ParseError("zero denominator: " + text);
    Rational r(num, den);
    r.canonicalize();
    return r;
  }
  if (is_integer_token(s)) {
    Rational r{parse_mpz(s)};
    return r;
  }
  return parse_decimal(s);
}

std::string rational_str(const Rational& x) {
  if (x.get_den() == 1) return x.get_num().get_str();
  return x.get_num().get_str() + "/" + x.get_den().get_str();
}

std::string rational_approx(const Rational& x, int digits) {
  std::ostringstream out;
  out.precision(digits);
  out << x.get_d();
  return out.str();
}

Rational pow2(long k) {
  mpz_class one = 1;
  mpz_class shifted;
  mpz_mul_2exp(shifted.get_mpz_t(), one.get_mpz_t(), static_cast<unsigned long>(k < 0 ? -k : k));
  return k >= 0 ? Rational(shifted) : Rational(1, shifted);
}

Rational rat_pow(const Rational& q, long k) {
  Rational acc = 1;
  Rational base = q;
  long e = k;
  while (e > 0) {
    if (e & 1) acc *= base;
    base *= base;
    e >>= 1;
  }
  return acc;
}

long floor_log2(const Rational& x) {
  if (x <= 0) throw std::invalid_argument("floor_log2 requires x > 0");
  const mpz_class num = x.get_num(), den = x.get_den();
  long e = static_cast<long>(mpz_sizeinbase(num.get_mpz_t(), 2)) -
           static_cast<long>(mpz_sizeinbase(den.get_mpz_t(), 2));
  // sizeinbase gives e within one; fix up exactly.
  while (pow2(e) > x) --e;
  while (pow2(e + 1) <= x) ++e;
  return e;
}

}  // namespace lipshadow
