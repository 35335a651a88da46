#include <gtest/gtest.h>

#include <sstream>

#include "rescue/config.hpp"

using namespace rescue;

namespace {

MissionConfig parse(const std::string& text) {
    MissionConfig c;
    std::istringstream in(text);
    apply_config(c, in);
    return c;
}

}  // namespace

TEST(Config, KeyValueLinesWithComments) {
    const MissionConfig c = parse(
        "# header\n"
        "explorer = greedy\n"
        "\n"
        "mission.dt = 0.1   ; trailing comment\n"
        "  frontier.min_size=12\n"
        "seed = 42\n");
    EXPECT_EQ(c.explorer, ExplorerKind::Greedy);
    EXPECT_DOUBLE_EQ(c.dt, 0.1);
    EXPECT_EQ(c.min_frontier_size, 12u);
    EXPECT_EQ(c.seed, 42u);
}

TEST(Config, ErrorsCarryLineNumbers) {
    auto line_of = [](const std::string& text) {
        try {
            parse(text);
        } catch (const ParseError& e) {
            return e.line();
        }
        return -1;
    };
    EXPECT_EQ(line_of("mission.dt = 0.1\nno equals sign\n"), 2);
    EXPECT_EQ(line_of("\n\nmission.bogus = 3\n"), 3);
    EXPECT_EQ(line_of("mission.dt = fast\n"), 1);
    EXPECT_EQ(line_of("lidar.beams = 3.5\n"), 1);
    EXPECT_EQ(line_of("explorer = random\n"), 1);
    MissionConfig c;
    EXPECT_THROW(set_config_value(c, "nope", "1"), ParseError);
}

TEST(Config, AnglesAreGivenInDegrees) {
    const MissionConfig c = parse("camera.fov_deg = 45\nexplore.fov_min_deg = -90\n");
    EXPECT_NEAR(c.camera.fov, kPi / 4, 1e-15);
    EXPECT_NEAR(c.explore.fov_min, -kPi / 2, 1e-15);
}

TEST(Config, ExpectedTags) {
    EXPECT_EQ(parse("mission.expected_tags = all\n").expected_tags.mode, ExpectedTags::Mode::All);
    EXPECT_EQ(parse("mission.expected_tags = none\n").expected_tags.mode, ExpectedTags::Mode::None);
    const ExpectedTags l = parse("mission.expected_tags = 1,4,7\n").expected_tags;
    EXPECT_EQ(l.mode, ExpectedTags::Mode::List);
    EXPECT_EQ(l.ids, (std::vector<int>{1, 4, 7}));
    EXPECT_EQ(detail::expected_to_string(l), "1,4,7");
    EXPECT_THROW(parse("mission.expected_tags = 1,x\n"), ParseError);
    EXPECT_EQ(MissionConfig{}.expected_tags.mode, ExpectedTags::Mode::None);
}

TEST(Config, ValidationRejectsOutOfRange) {
    EXPECT_NO_THROW(validate_config(MissionConfig{}));
    for (const char* bad : {"mission.dt = 0", "mission.max_time = -1", "explore.n_rays = 4", "camera.fov_deg = 120",
                            "camera.min_range = 5", "filter.sigma0 = 0", "filter.r_range = 0", "lidar.beams = 2",
                            "explore.fov_min_deg = 60\nexplore.fov_max_deg = 30", "robot.v_max = 0"}) {
        EXPECT_THROW(validate_config(parse(std::string(bad) + "\n")), PreconditionError) << bad;
    }
}

TEST(Config, EchoRoundTrips) {
    MissionConfig c = parse("explorer = greedy\nmission.expected_tags = 2,3\ncamera.fov_deg = 33.5\nlidar.period = 0.25\n");
    std::ostringstream text;
    for (const auto& [k, v] : config_entries(c)) text << k << " = " << v << "\n";
    const MissionConfig back = parse(text.str());
    EXPECT_EQ(config_entries(back), config_entries(c));
    EXPECT_NEAR(back.camera.fov, c.camera.fov, 1e-15);
    std::set<std::string> names;
    for (const auto& [k, v] : config_entries(c)) EXPECT_TRUE(names.insert(k).second) << k;
}
