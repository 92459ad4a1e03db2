// SPDX-License-Identifier: Apache-2.0
#include "enccluster/bn/curve.hpp"

#include "enccluster/errors.hpp"

namespace enccluster::bn {

std::vector<int8_t> wnaf_digits(const mpz_t k) {
  require(mpz_sgn(k) >= 0, Errc::invalid_argument, "negative scalar");
  std::vector<int8_t> out;
  out.reserve(mpz_sizeinbase(k, 2) + 1);
  mpz_t n;
  mpz_init_set(n, k);
  while (mpz_sgn(n) > 0) {
    if (mpz_odd_p(n)) {
      long d = long(mpz_fdiv_ui(n, 16));
      if (d > 8) d -= 16;
      out.push_back(int8_t(d));
      if (d > 0)
        mpz_sub_ui(n, n, static_cast<unsigned long>(d));
      else
        mpz_add_ui(n, n, static_cast<unsigned long>(-d));
    } else {
      out.push_back(0);
    }
    mpz_fdiv_q_2exp(n, n, 1);
  }
  mpz_clear(n);
  return out;
}

std::vector<int8_t> naf_digits(const mpz_t k) {
  require(mpz_sgn(k) >= 0, Errc::invalid_argument, "negative scalar");
  std::vector<int8_t> out;
  out.reserve(mpz_sizeinbase(k, 2) + 1);
  mpz_t n;
  mpz_init_set(n, k);
  while (mpz_sgn(n) > 0) {
    if (mpz_odd_p(n)) {
      const int8_t d = mpz_fdiv_ui(n, 4) == 1 ? 1 : -1;
      out.push_back(d);
      if (d > 0)
        mpz_sub_ui(n, n, 1);
      else
        mpz_add_ui(n, n, 1);
    } else {
      out.push_back(0);
    }
    mpz_fdiv_q_2exp(n, n, 1);
  }
  mpz_clear(n);
  return out;
}

}  // namespace enccluster::bn
