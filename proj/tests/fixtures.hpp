#pragma once

// Shared hand-counted fixture: two speakers, six pre-tokenized lines, one
// speaker per gender.
//
//   male   (m1): [僕 だぜ 行く] [だぜ ね] [僕 行く]   7 tokens
//   female (f1): [私 行く わ]   [ね わ]   [行く]      6 tokens
//
// df: 僕 1, だぜ 1, 私 1, わ 1, 行く 2, ね 2; N = 2.

#include <string>

namespace serifu::fixture {

inline const std::string kTokenized =
    "S\tm1\tRyo\tw1\tmale\tadult\n"
    "S\tf1\tAya\tw1\tfemale\tadult\n"
    "L\tm1\t僕\tだぜ\t行く\n"
    "L\tm1\tだぜ\tね\n"
    "L\tf1\t私\t行く\tわ\n"
    "L\tf1\tね\tわ\n"
    "L\tm1\t僕\t行く\n"
    "L\tf1\t行く\n";

}  // namespace serifu::fixture
