// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <sstream>

#include "deepnorm/synth.hpp"

using namespace deepnorm;

namespace {

std::string serialize(const Corpus& c) {
  std::ostringstream out;
  write_corpus(out, c);
  return out.str();
}

}  // namespace

TEST(SynthSpec, Parse) {
  SynthSpec s = parse_synth_spec("DATE=100,CARDINAL=50");
  EXPECT_EQ(s[class_id(SemioticClass::Date)], 100u);
  EXPECT_EQ(s[class_id(SemioticClass::Cardinal)], 50u);
  EXPECT_EQ(s[class_id(SemioticClass::Digit)], 0u);
  EXPECT_THROW(parse_synth_spec("DATE"), UsageError);
  EXPECT_THROW(parse_synth_spec("BOGUS=3"), std::exception);
  EXPECT_THROW(parse_synth_spec("DATE=x"), UsageError);
}

TEST(Synth, DateOnly) {
  SynthSpec s{};
  s[class_id(SemioticClass::Date)] = 100;
  VerbalizerRegistry reg;
  Corpus c = synth_corpus(s, 1, reg);
  auto h = class_histogram(c);
  EXPECT_EQ(h[class_id(SemioticClass::Date)], 100u);
  for (const Token& t : c.tokens())
    if (t.cls == SemioticClass::Date) EXPECT_EQ(*t.after, verbalizers::date(t.before)) << t.before;
}

TEST(Synth, EveryClassSatisfiesRegistry) {
  SynthSpec s{};
  for (auto c : kAllClasses)
    if (is_transforming(c)) s[class_id(c)] = 50;
  VerbalizerRegistry reg;
  Corpus c = synth_corpus(s, 3, reg);
  auto h = class_histogram(c);
  for (auto cls : kAllClasses)
    if (is_transforming(cls)) EXPECT_EQ(h[class_id(cls)], 50u) << class_name(cls);
  for (const Token& t : c.tokens()) EXPECT_EQ(reg.apply(*t.cls, t.before), *t.after) << t.before;
  std::size_t changed = 0;
  for (const Token& t : c.tokens()) changed += (*t.after != t.before);
  EXPECT_GT(changed, 0u);
}

TEST(Synth, Deterministic) {
  SynthSpec s = parse_synth_spec("DATE=30,CARDINAL=30,DIGIT=30,LETTERS=30");
  EXPECT_EQ(serialize(synth_corpus(s, 5)), serialize(synth_corpus(s, 5)));
  EXPECT_NE(serialize(synth_corpus(s, 5)), serialize(synth_corpus(s, 6)));
}

TEST(Synth, AllZeroIsFillerOnly) {
  Corpus c = synth_corpus(SynthSpec{}, 1);
  EXPECT_FALSE(c.empty());
  for (const Token& t : c.tokens()) {
    EXPECT_FALSE(is_transforming(*t.cls));
    EXPECT_EQ(*t.after, t.before);
  }
}

TEST(Synth, SerializesAndParsesBack) {
  Corpus c = synth_corpus(parse_synth_spec("MONEY=20,TIME=20,ELECTRONIC=20,FRACTION=20"), 2);
  std::istringstream in(serialize(c));
  Corpus back = parse_corpus(in, true);
  ASSERT_EQ(back.size(), c.size());
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(back[i], c[i]);
}
