#include "doctest.h"
#include "maxdrop/augment.hpp"

#include <cstdint>

using namespace maxdrop;

namespace {

// Finds a seed whose first two draws select the wanted (row, col) center.
std::uint64_t seed_for_center(int h, int w, int cy, int cx) {
    for (std::uint64_t seed = 0; seed < 100000; ++seed) {
        Rng rng(seed);
        if (static_cast<int>(rng.next_u64() % h) == cy &&
            static_cast<int>(rng.next_u64() % w) == cx)
            return seed;
    }
    FAIL("no seed found");
    return 0;
}

int count_changed_pixels(const Tensor& a, const Tensor& b) {
    int changed = 0;
    for (int k = 0; k < a.shape.h; ++k)
        for (int l = 0; l < a.shape.w; ++l) {
            bool diff = false;
            for (int j = 0; j < a.shape.c; ++j)
                if (a.at(0, j, k, l) != b.at(0, j, k, l)) diff = true;
            if (diff) ++changed;
        }
    return changed;
}

}  // namespace

TEST_CASE("cutout clips the square to the image") {
    const Tensor img = Tensor::full(Shape{1, 1, 4, 4}, 1.0f);

    Rng at11(seed_for_center(4, 4, 1, 1));
    const Tensor out = cutout(img, 2, at11);
    int ones = 0;
    for (int k = 0; k < 4; ++k)
        for (int l = 0; l < 4; ++l) {
            if (k <= 1 && l <= 1)
                CHECK(out.at(0, 0, k, l) == 0.0f);
            else
                ones += out.at(0, 0, k, l) == 1.0f;
        }
    CHECK(ones == 12);

    // oversized square erases everything
    Rng at22(seed_for_center(4, 4, 2, 2));
    for (float v : cutout(img, 8, at22).data) CHECK(v == 0.0f);
}

TEST_CASE("cutout zeroes the same positions in every channel") {
    Rng data_rng(21);
    const Tensor img = Tensor::uniform(Shape{1, 3, 8, 8}, data_rng);
    Rng rng(4);
    const Tensor out = cutout(img, 3, rng);
    for (int k = 0; k < 8; ++k)
        for (int l = 0; l < 8; ++l) {
            const bool z0 = out.at(0, 0, k, l) == 0.0f && img.at(0, 0, k, l) != 0.0f;
            const bool z1 = out.at(0, 1, k, l) == 0.0f && img.at(0, 1, k, l) != 0.0f;
            CHECK(z0 == z1);
        }
}

TEST_CASE("random erasing rewrites the stated area") {
    Rng data_rng(22);
    const Tensor img = Tensor::uniform(Shape{1, 3, 8, 8}, data_rng);
    EraseParams p{0.25f, 0.25f, 1.0f, 1.0f};
    Rng rng(1);
    const Tensor out = random_erasing(img, p, rng);
    CHECK(count_changed_pixels(img, out) == 16);
    for (float v : out.data) {
        CHECK(v >= 0.0f);
        CHECK(v < 1.0f);
    }
}

TEST_CASE("random erasing returns the input after 10 failed placements") {
    Rng data_rng(23);
    const Tensor img = Tensor::uniform(Shape{1, 3, 8, 8}, data_rng);
    EraseParams p{0.9f, 0.9f, 3.3f, 3.3f};  // rectangle never fits
    Rng rng(2);
    CHECK(random_erasing(img, p, rng).same_bits(img));
}

TEST_CASE("random erasing validates area bounds") {
    Tensor img(Shape{1, 1, 4, 4});
    Rng rng(0);
    CHECK_THROWS_AS(random_erasing(img, EraseParams{0.0f, 0.3f, 1, 1}, rng),
                    std::invalid_argument);
    CHECK_THROWS_AS(random_erasing(img, EraseParams{0.2f, 1.0f, 1, 1}, rng),
                    std::invalid_argument);
}

TEST_CASE("random crop 32->28") {
    Rng data_rng(24);
    const Tensor img = Tensor::uniform(Shape{1, 3, 32, 32}, data_rng);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        const Tensor out = random_crop(img, 28, 28, rng);
        CHECK(out.shape == Shape{1, 3, 28, 28});
        // locate the offset by matching the first row against the source
        bool found = false;
        for (int top = 0; top <= 4 && !found; ++top)
            for (int left = 0; left <= 4 && !found; ++left) {
                bool match = true;
                for (int l = 0; l < 28 && match; ++l)
                    match = out.at(0, 0, 0, l) == img.at(0, 0, top, left + l);
                found = match;
            }
        CHECK(found);
    }
    Rng rng(0);
    CHECK(random_crop(img, 32, 32, rng).same_bits(img));
    CHECK_THROWS_AS(random_crop(img, 33, 32, rng), std::invalid_argument);
}

TEST_CASE("hflip is an involution when forced") {
    Rng data_rng(25);
    const Tensor img = Tensor::uniform(Shape{1, 3, 6, 6}, data_rng);
    Rng rng(3);
    CHECK(hflip(hflip(img, 1.0f, rng), 1.0f, rng).same_bits(img));
    CHECK(hflip(img, 0.0f, rng).same_bits(img));
}

TEST_CASE("resize is identity on matching dims and nearest otherwise") {
    Rng data_rng(26);
    const Tensor img = Tensor::uniform(Shape{1, 3, 32, 32}, data_rng);
    CHECK(resize_nearest(img, 32, 32).same_bits(img));
    const Tensor up = resize_nearest(img, 16, 16);
    CHECK(up.shape == Shape{1, 3, 16, 16});
    CHECK(up.at(0, 0, 0, 0) == img.at(0, 0, 0, 0));
}

TEST_CASE("plan applies steps in order and replays under the same seed") {
    Rng data_rng(27);
    const Tensor img = Tensor::uniform(Shape{1, 3, 16, 16}, data_rng);

    AugmentPlan crop_then_cut{{AugmentStep::crop(12, 12), AugmentStep::cutout(4)}};
    AugmentPlan cut_then_crop{{AugmentStep::cutout(4), AugmentStep::crop(12, 12)}};
    Rng a(5), b(5), c(5);
    const Tensor first = crop_then_cut.apply(img, a);
    CHECK(first.same_bits(crop_then_cut.apply(img, b)));
    CHECK_FALSE(first.same_bits(cut_then_crop.apply(img, c)));
}
