// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "rsbench/error.hpp"
#include "rsbench/utf8.hpp"

namespace rsbench {

namespace detail {

inline const icu::Normalizer2& nfkc() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFKCInstance(status);
  if (U_FAILURE(status) || n == nullptr) {
    throw Error(ErrorKind::Io, std::string("ICU NFKC data unavailable: ") + u_errorName(status));
  }
  return *n;
}

inline std::u32string nfkc_lower(std::string_view text) {
  // Strict decode first so malformed bytes surface as errors instead of U+FFFD.
  std::u32string cps = utf8::decode(text);
  icu::UnicodeString us = icu::UnicodeString::fromUTF32(
      reinterpret_cast<const UChar32*>(cps.data()), static_cast<int32_t>(cps.size()));
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString folded = nfkc().normalize(us, status);
  if (U_FAILURE(status)) {
    throw Error(ErrorKind::Parse, std::string("NFKC normalization failed: ") + u_errorName(status));
  }
  folded.toLower(icu::Locale::getRoot());
  std::u32string out(static_cast<std::size_t>(folded.countChar32()), U'\0');
  status = U_ZERO_ERROR;
  folded.toUTF32(reinterpret_cast<UChar32*>(out.data()), static_cast<int32_t>(out.size()), status);
  return out;
}

inline bool is_article(std::u32string_view w) {
  return w == U"a" || w == U"an" || w == U"the";
}

}  // namespace detail

/// Answer normalization used by exact-match scoring: NFKC fold, lower-case,
/// punctuation to spaces, drop the articles "a"/"an"/"the", collapse whitespace.
///
/// NFKC does not map Cyrillic look-alikes onto Latin letters, so homoglyph
/// noise survives normalization.
inline std::string normalize(std::string_view text) {
  const std::u32string cps = detail::nfkc_lower(text);
  std::vector<std::u32string> words;
  std::u32string cur;
  for (char32_t cp : cps) {
    const auto c = static_cast<UChar32>(cp);
    if (u_ispunct(c) || u_isUWhiteSpace(c) || u_iscntrl(c)) {
      if (!cur.empty()) words.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(cp);
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));

  std::u32string joined;
  for (const auto& w : words) {
    if (detail::is_article(w)) continue;
    if (!joined.empty()) joined.push_back(U' ');
    joined += w;
  }
  return utf8::encode(joined);
}

/// Case-insensitive, whitespace-collapsed form used for lexical anchor checks.
inline std::string fold_for_matching(std::string_view text) {
  const std::u32string cps = detail::nfkc_lower(text);
  std::u32string out;
  bool pending_space = false;
  for (char32_t cp : cps) {
    if (u_isUWhiteSpace(static_cast<UChar32>(cp))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(cp);
  }
  return utf8::encode(out);
}

}  // namespace rsbench
