#include "doctest.h"
#include "hseg/label_map.hpp"

using namespace hseg;

TEST_CASE("instance ids are sorted and distinct") {
  LabelMap m(4, 3);
  m(0, 0) = 7;
  m(3, 2) = 2;
  m(1, 1) = 7;
  CHECK(m.instance_ids() == std::vector<InstanceId>{2, 7});
  CHECK(m.instance_count() == 2);
  const auto px = instance_pixels(m);
  CHECK(px.at(7).size() == 2);
  CHECK(px.at(7)[0] == Pixel{0, 0});
  CHECK(px.at(7)[1] == Pixel{1, 1});
}

TEST_CASE("relabel_sequential numbers by first appearance") {
  LabelMap m(3, 1);
  m(0, 0) = 9;
  m(1, 0) = 0;
  m(2, 0) = 4;
  const LabelMap r = relabel_sequential(m);
  CHECK(r(0, 0) == 1);
  CHECK(r(1, 0) == 0);
  CHECK(r(2, 0) == 2);
  CHECK(same_partition(m, r));
}

TEST_CASE("same_partition rejects merges, splits and background changes") {
  LabelMap a(4, 1), b(4, 1);
  a(0, 0) = 1, a(1, 0) = 1, a(2, 0) = 2;
  b(0, 0) = 5, b(1, 0) = 5, b(2, 0) = 3;
  CHECK(same_partition(a, b));
  b(2, 0) = 5;
  CHECK_FALSE(same_partition(a, b));
  b(2, 0) = 3;
  b(3, 0) = 3;
  CHECK_FALSE(same_partition(a, b));
  b(3, 0) = 0;
  b(0, 0) = 3;
  CHECK_FALSE(same_partition(a, b));
}

TEST_CASE("crop pads outside the source with background") {
  LabelMap m(2, 2, 1);
  const LabelMap c = crop(m, 1, 1, 3, 2);
  CHECK(c.width() == 3);
  CHECK(c.height() == 2);
  CHECK(c(0, 0) == 1);
  CHECK(c(1, 0) == 0);
  CHECK(c(0, 1) == 0);

  Image img(2, 2, 1, 0.5f);
  const Image ci = crop(img, -1, 0, 2, 2);
  CHECK(ci.at(0, 0, 0) == 0.0f);
  CHECK(ci.at(0, 1, 0) == 0.5f);
}
