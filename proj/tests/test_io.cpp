#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <sstream>

#include "support.hpp"

using namespace occlumask;

TEST(Pgm, SixteenBitRoundTripIsBigEndian) {
    Image img(3, 2, Domain::counts, 12);
    img(0, 0) = 4095;
    img(1, 0) = 256;
    img(2, 1) = 17.5;  // rounds up
    std::stringstream ss;
    pnm::write_pgm(ss, img);
    const std::string bytes = ss.str();
    EXPECT_EQ(bytes.substr(0, 12), "P5\n3 2\n4095\n");
    EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 0x0f);
    EXPECT_EQ(static_cast<unsigned char>(bytes[13]), 0xff);
    const Image back = pnm::read_pgm(ss);
    EXPECT_EQ(back.bit_depth(), 12);
    EXPECT_EQ(back(0, 0), 4095);
    EXPECT_EQ(back(1, 0), 256);
    EXPECT_EQ(back(2, 1), 18);
}

TEST(Pgm, EightBitWithCommentAndClamp) {
    std::stringstream in;
    in << "P5\n# made by hand\n2 1\n255\n" << char(7) << char(200);
    const Image img = pnm::read_pgm(in);
    EXPECT_EQ(img.bit_depth(), 8);
    EXPECT_EQ(img(1, 0), 200);
    Image over(1, 1, Domain::counts, 8, 300.0);
    std::stringstream out;
    pnm::write_pgm(out, over);
    EXPECT_EQ(static_cast<unsigned char>(out.str().back()), 255);
}

TEST(Pgm, MalformedInputsRejected) {
    for (const std::string& text : {std::string("P2\n1 1\n255\n0"), std::string("P5\n1 1\n1000\n00"),
                                    std::string("P5\n2 2\n255\n\x01"), std::string("P5\n0 2\n255\n")}) {
        std::stringstream in(text);
        EXPECT_THROW(pnm::read_pgm(in), DataError) << text;
    }
    EXPECT_THROW(pnm::read_pgm(std::string("/nonexistent/x.pgm")), DataError);
}

TEST(ConfigText, ParsesCommentsAndWhitespace) {
    const auto c = Config::parse("# header\n  a.b = 1.5  \nflag=yes\nname = two words # trailing\n");
    EXPECT_DOUBLE_EQ(c.get_double("a.b", 0.0), 1.5);
    EXPECT_TRUE(c.get_bool("flag", false));
    EXPECT_EQ(c.get_string("name"), "two words");
    EXPECT_EQ(c.get_int("missing", 7), 7);
    EXPECT_THROW(c.get_double("name", 0.0), UsageError);
    EXPECT_THROW(c.require_string("nope"), UsageError);
}

TEST(ConfigText, LinesWithoutEqualsRejected) { EXPECT_THROW(Config::parse("just words\n"), UsageError); }

TEST(ConfigText, DumpReparsesIdentically) {
    const auto c = Config::parse("z = 1\na = hello\nm.k = 0.125\n");
    EXPECT_EQ(Config::parse(c.dump()), c);
}

TEST(Scene, DiscPresetCentreAndCorner) {
    const Image img = scene::generate(scene::disc_preset());
    EXPECT_EQ(img.width(), 720);
    EXPECT_EQ(img(360, 270), 4000.0);
    EXPECT_EQ(img(0, 0), 200.0);
    EXPECT_EQ(img(719, 539), 200.0);
}

TEST(Scene, NoiselessSpecIgnoresSeed) {
    auto a = scene::disc_preset(), b = scene::disc_preset();
    b.seed = 99;
    EXPECT_EQ(scene::generate(a), scene::generate(b));
}

TEST(Scene, NoiseIsSeededAndBounded) {
    auto s = scene::disc_preset();
    s.noise_amplitude = 3.0;
    const Image a = scene::generate(s), b = scene::generate(s);
    EXPECT_EQ(a, b);
    s.seed = 1;
    EXPECT_NE(scene::generate(s), a);
    EXPECT_LE(std::abs(a(0, 0) - 200.0), 3.0);
}

TEST(Scene, SoftEdgeProfileIsMonotone) {
    auto s = scene::disc_preset();
    s.soft_edge = 5.0;
    const Image img = scene::generate(s);
    const double cx = 359.5, cy = 269.5;
    double prev = 4000.0;
    for (int x = 360; x < 720; ++x) {
        const double v = img(x, 270);
        EXPECT_LE(v, prev);
        EXPECT_GE(v, 200.0);
        prev = v;
    }
    EXPECT_EQ(img(static_cast<int>(cx + 90), static_cast<int>(cy)), 4000.0);
    EXPECT_EQ(img(static_cast<int>(cx + 110), static_cast<int>(cy)), 200.0);
    int ramp = 0;
    for (int x = 360; x < 720; ++x) ramp += img(x, 270) > 200.0 && img(x, 270) < 4000.0;
    EXPECT_GE(ramp, 3);
}

TEST(Scene, InvalidSpecsRejected) {
    auto s = scene::disc_preset();
    s.primitives[0].intensity = 5000.0;
    EXPECT_THROW(scene::generate(s), DataError);
    s = scene::disc_preset();
    s.primitives[0].cx = 800.0;
    EXPECT_THROW(scene::generate(s), DataError);
}

TEST(Scene, PrimitivesTextRoundTrips) {
    const auto s = scene::snowman_preset();
    const auto back = scene::parse_primitives(scene::format_primitives(s.primitives));
    ASSERT_EQ(back.size(), s.primitives.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        EXPECT_EQ(back[i].kind, s.primitives[i].kind);
        EXPECT_EQ(back[i].size_x, s.primitives[i].size_x);
        EXPECT_EQ(back[i].intensity, s.primitives[i].intensity);
    }
    EXPECT_THROW(scene::parse_primitives("tri 1 2 3"), UsageError);
}

TEST(Parallel, VisitsEveryIndexOnceAndRethrows) {
    for (unsigned threads : {1u, 3u, 8u}) {
        std::vector<std::atomic<int>> hits(101);
        parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; }, threads);
        for (auto& h : hits) EXPECT_EQ(h.load(), 1);
    }
    EXPECT_THROW(parallel_for(10, [](std::size_t i) { if (i == 7) throw DataError("x"); }, 4), DataError);
}

TEST(Parallel, EnvironmentCapsThreads) {
    setenv("OCCLUMASK_THREADS", "3", 1);
    EXPECT_EQ(thread_count(), 3u);
    unsetenv("OCCLUMASK_THREADS");
    EXPECT_GE(thread_count(), 1u);
}
