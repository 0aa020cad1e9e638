#include <doctest.h>

#include <numeric>
#include <vector>

#include "voiceclone/rng.hpp"
#include "voiceclone/text.hpp"

using namespace voiceclone;

TEST_CASE("rng matches the standard mt19937_64 sequence") {
    Rng r(5489);
    for (int i = 0; i < 9999; ++i) r.next();
    CHECK(r.next() == 9981545732273789042ULL);
}

TEST_CASE("rng draws match the python mirror") {
    Rng a(7);
    CHECK(a.next() == 13915952638675311015ULL);
    CHECK(a.next() == 17511516338625233250ULL);
    CHECK(a.next() == 2165911192842364878ULL);

    Rng b(7);
    std::vector<std::uint64_t> below;
    for (int i = 0; i < 10; ++i) below.push_back(b.below(10));
    CHECK(below == std::vector<std::uint64_t>{5, 0, 8, 6, 1, 8, 9, 8, 1, 0});

    std::vector<int> items(10);
    std::iota(items.begin(), items.end(), 0);
    Rng c(42);
    c.shuffle(std::span<int>(items));
    CHECK(items == std::vector<int>{6, 0, 4, 7, 9, 8, 1, 3, 5, 2});
}

TEST_CASE("below stays in range") {
    Rng r(1);
    for (std::uint64_t bound : {1ULL, 2ULL, 3ULL, 1000ULL, (1ULL << 63) + 1}) {
        for (int i = 0; i < 200; ++i) CHECK(r.below(bound) < bound);
    }
}

TEST_CASE("text helpers") {
    CHECK(text::to_lower("AbC") == "abc");
    CHECK(text::trim("  x y \n") == "x y");
    CHECK(text::contains_word("Please book it", "book"));
    CHECK_FALSE(text::contains_word("Facebook page", "book"));
    CHECK(text::contains_word("we can Set Up the router", "set up"));
    CHECK(text::words("Hello, world! It's fine.") == std::vector<std::string>{"hello", "world", "its", "fine"});
    CHECK(text::sentences("One. Two? Three!") == std::vector<std::string>{"One.", "Two?", "Three!"});
    CHECK(text::as_sentence("hello") == "hello.");
    CHECK(text::as_sentence("Done!") == "Done!");
    CHECK(text::as_sentence("He said \"stop.\"") == "He said \"stop.\"");
    CHECK(text::join({"a", "b", "c"}, ", ") == "a, b, c");
}
