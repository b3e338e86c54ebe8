#include <doctest.h>

#include <vector>

#include "compact/taxonomy.hpp"

using namespace compact;

TEST_CASE("taxonomy holds exactly the ten capabilities in table order") {
    const auto caps = all_capabilities();
    REQUIRE(caps.size() == 10);
    CHECK(caps[0].id == Capability::color);
    CHECK(caps[2].id == Capability::object_recognition);

    const std::vector<std::string_view> expected = {
        "color",
        "shape",
        "object_recognition",
        "action_recognition",
        "text_recognition",
        "spatial_recognition",
        "counting",
        "spatial_relationship",
        "object_interaction",
        "scene_understanding",
    };
    for (std::size_t i = 0; i < caps.size(); ++i) {
        CHECK(caps[i].name == expected[i]);
        CHECK(to_string(caps[i].id) == expected[i]);
    }
}

TEST_CASE("group membership partitions the set") {
    int attribution = 0;
    int recognition = 0;
    int relation = 0;
    for (const auto& info : all_capabilities()) {
        switch (info.group) {
            case CapabilityGroup::attribution: ++attribution; break;
            case CapabilityGroup::recognition: ++recognition; break;
            case CapabilityGroup::relation: ++relation; break;
        }
    }
    CHECK(attribution == 2);
    CHECK(recognition == 5);
    CHECK(relation == 3);

    CHECK(capability_info(Capability::color).group == CapabilityGroup::attribution);
    CHECK(capability_info(Capability::shape).group == CapabilityGroup::attribution);
    CHECK(capability_info(Capability::counting).group == CapabilityGroup::recognition);
    CHECK(capability_info(Capability::spatial_recognition).group ==
          CapabilityGroup::recognition);
    CHECK(capability_info(Capability::scene_understanding).group ==
          CapabilityGroup::relation);
}

TEST_CASE("combination_count") {
    CHECK(combination_count(1) == 10);
    CHECK(combination_count(2) == 45);
    CHECK(combination_count(3) == 120);
    CHECK(combination_count(5) == 252);
    CHECK(combination_count(10) == 1);
    CHECK_THROWS_AS(combination_count(0), std::out_of_range);
    CHECK_THROWS_AS(combination_count(11), std::out_of_range);
}

TEST_CASE("parse_capability normalizes spaces, underscores and case") {
    CHECK(parse_capability("spatial relationship") == Capability::spatial_relationship);
    CHECK(parse_capability("Counting") == Capability::counting);
    CHECK(parse_capability("OBJECT_RECOGNITION") == Capability::object_recognition);
    CHECK(parse_capability("  scene understanding  ") ==
          Capability::scene_understanding);
    CHECK_THROWS_AS(parse_capability("math"), CapabilityParseError);
    try {
        parse_capability("math");
    } catch (const CapabilityParseError& e) {
        CHECK(e.offending() == "math");
    }

    Capability out;
    CHECK_FALSE(try_parse_capability("cultural knowledge", out));
}

TEST_CASE("parse round-trips every capability") {
    for (const auto& info : all_capabilities()) {
        CHECK(parse_capability(std::string(to_string(info.id))) == info.id);
    }
}

TEST_CASE("masks and combination keys") {
    const CapabilityMask mask =
        mask_of(Capability::counting) | mask_of(Capability::color);
    CHECK(mask_size(mask) == 2);
    CHECK(mask_key(mask) == "color+counting");  // canonical order, not input order
    CHECK(parse_mask_key("counting+color") == mask);
    CHECK(parse_mask_key("Counting+COLOR") == mask);

    const auto members = mask_members(mask);
    REQUIRE(members.size() == 2);
    CHECK(members[0] == Capability::color);
    CHECK(members[1] == Capability::counting);
}

TEST_CASE("combinations enforce 1-3 members") {
    CHECK(Combination({Capability::color}).k_gen() == 1);
    CHECK(Combination({Capability::color, Capability::shape, Capability::counting})
              .k_gen() == 3);
    CHECK_THROWS_AS(Combination(static_cast<CapabilityMask>(0)), std::invalid_argument);
    CHECK_THROWS_AS(Combination({Capability::color, Capability::shape,
                                 Capability::counting, Capability::text_recognition}),
                    std::invalid_argument);

    CHECK(Combination({Capability::counting, Capability::color}) ==
          Combination({Capability::color, Capability::counting}));
}
