#include <gtest/gtest.h>

#include "ehr/config_text.hpp"
#include "ehr/errors.hpp"

using namespace ehr;

TEST(ConfigText, NestedMapsAndSequences) {
    const auto n = parse_config_text(
        "a: 1\n"
        "b:\n"
        "  c: \"x: y\"  # comment\n"
        "  d: [p, 'q r', \"s\"]\n"
        "e:\n"
        "  - one\n"
        "  - k: v\n"
        "    w: z\n"
        "f:\n");
    ASSERT_TRUE(n.is_map());
    EXPECT_EQ(n.get("a")->as_scalar(), "1");
    EXPECT_EQ(n.get("b")->get("c")->as_scalar(), "x: y");
    const auto& d = n.get("b")->get("d")->as_seq();
    ASSERT_EQ(d.size(), 3u);
    EXPECT_EQ(d[1].as_scalar(), "q r");
    const auto& e = n.get("e")->as_seq();
    ASSERT_EQ(e.size(), 2u);
    EXPECT_EQ(e[0].as_scalar(), "one");
    EXPECT_EQ(e[1].get("w")->as_scalar(), "z");
    EXPECT_TRUE(n.get("f")->is_null());
}

TEST(ConfigText, RejectsUnsupportedConstructs) {
    for (const char* bad : {"a: &x 1\n", "a: *x\n", "a: !!str 1\n", "a: |\n  text\n", "a: {b: 1}\n",
                            "---\na: 1\n", "%YAML 1.2\na: 1\n", "a:\n\tb: 1\n", "a: 1\n  b: 2\n",
                            "a: [1, [2]]\n", "a: \"unterminated\n"}) {
        EXPECT_THROW(parse_config_text(bad), SyntaxError) << bad;
    }
}

TEST(ConfigText, RepeatedKeysArePreserved) {
    const auto n = parse_config_text("a: 1\na: 2\n");
    ASSERT_EQ(n.as_map().size(), 2u);
    EXPECT_EQ(n.get("a")->as_scalar(), "1");
}

TEST(ConfigText, EmitParseRoundTrip) {
    const char* texts[] = {
        "a: 1\nb:\n  - x\n  - \"y: z\"\nc:\n  d: ''\n",
        "list: [a, b]\nnested:\n  deep:\n    deeper: \"#not a comment\"\n",
    };
    for (const char* t : texts) {
        const auto n = parse_config_text(t);
        EXPECT_EQ(parse_config_text(emit_config_text(n)), n) << t;
    }
}
