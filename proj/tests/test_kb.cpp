#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "medkg/kb.hpp"

using namespace medkg;

namespace {

std::string temp_tsv(const std::string& name, const std::string& content) {
  std::string path = (std::filesystem::temp_directory_path() / name).string();
  write_file(path, content);
  return path;
}

}  // namespace

TEST_CASE("triplet row parses into (protein, action, drug)") {
  KnowledgeBase kb;
  auto report = kb.load_triplets(temp_tsv("kb_t1.tsv", "Q9NY46\tinhibitor\tDB00243\n"));
  CHECK(report.rows == 1);
  Triplet expected{EntityId::protein("Q9NY46"), "inhibitor", EntityId::drug("DB00243")};
  CHECK(kb.has_triplet(expected));
  CHECK(kb.targets_of(EntityId::drug("DB00243")) == std::set<EntityId>{EntityId::protein("Q9NY46")});
}

TEST_CASE("empty file loads an empty KB") {
  KnowledgeBase kb;
  auto report = kb.load_triplets(temp_tsv("kb_t2.tsv", ""));
  CHECK(report.rows == 0);
  CHECK(kb.triplets().empty());
}

TEST_CASE("triplicated row keeps one triplet with duplicate count 2") {
  KnowledgeBase kb;
  std::string row = "P1\tbinder\tDB1\n";
  auto report = kb.load_triplets(temp_tsv("kb_t3.tsv", row + row + row));
  CHECK(report.rows == 1);
  CHECK(report.duplicates == 2);
  CHECK(kb.triplets().size() == 1);
}

TEST_CASE("comments are skipped and malformed rows name the line") {
  KnowledgeBase kb;
  CHECK(kb.load_triplets(temp_tsv("kb_t4.tsv", "# header\nP1\tbinder\tDB1\n")).rows == 1);
  CHECK_THROWS_WITH_AS(kb.load_triplets(temp_tsv("kb_t5.tsv", "P1\tbinder\tDB1\nbadrow\n")),
                       doctest::Contains(":2:"), ValidationError);
}

TEST_CASE("pathway semantics: direction, self-loop warning, reverse is distinct") {
  KnowledgeBase kb;
  auto report = kb.load_pathways(temp_tsv("kb_p1.tsv", "P1\tP2\nP1\tP1\nP2\tP1\n"));
  CHECK(report.rows == 2);
  CHECK(report.warnings.size() == 1);
  CHECK(kb.pathways().size() == 2);

  KnowledgeBase kb2;
  kb2.add_pathway(EntityId::protein("P1"), EntityId::protein("P2"));
  CHECK(kb2.interactors_of(EntityId::protein("P1"), true) == std::set<EntityId>{EntityId::protein("P2")});
  CHECK(kb2.interactors_of(EntityId::protein("P2"), true).empty());
  CHECK(kb2.interactors_of(EntityId::protein("P2"), false) == std::set<EntityId>{EntityId::protein("P1")});
}

TEST_CASE("chain P1->P2->P3 gives P2 both undirected neighbors") {
  KnowledgeBase kb;
  kb.add_pathway(EntityId::protein("P1"), EntityId::protein("P2"));
  kb.add_pathway(EntityId::protein("P2"), EntityId::protein("P3"));
  CHECK(kb.interactors_of(EntityId::protein("P2")) ==
        std::set<EntityId>{EntityId::protein("P1"), EntityId::protein("P3")});
}

TEST_CASE("kind errors on mapping queries") {
  KnowledgeBase kb;
  CHECK_THROWS_AS(kb.targets_of(EntityId::protein("P1")), ContractError);
  CHECK_THROWS_AS(kb.interactors_of(EntityId::drug("DB1")), ContractError);
  CHECK(kb.targets_of(EntityId::drug("UNSEEN")).empty());
}

TEST_CASE("drug with 3 triplets over 2 proteins has a 2-element target set") {
  KnowledgeBase kb;
  kb.add_triplet({EntityId::protein("P1"), "a", EntityId::drug("D")});
  kb.add_triplet({EntityId::protein("P1"), "b", EntityId::drug("D")});
  kb.add_triplet({EntityId::protein("P2"), "a", EntityId::drug("D")});
  CHECK(kb.targets_of(EntityId::drug("D")).size() == 2);
}

TEST_CASE("save(load(file)) canonical round-trip") {
  std::string messy = "P2\tz\tDB2\nP1\ta\tDB1\nP1\ta\tDB1\n";
  KnowledgeBase kb;
  kb.load_triplets(temp_tsv("kb_rt.tsv", messy));
  std::string canon = kb.save_triplets();
  CHECK(canon == "P1\ta\tDB1\nP2\tz\tDB2\n");
  KnowledgeBase kb2;
  kb2.load_triplets(temp_tsv("kb_rt2.tsv", canon));
  CHECK(kb2.save_triplets() == canon);

  KnowledgeBase kp;
  kp.load_pathways(temp_tsv("kb_rtp.tsv", "P3\tP1\nP1\tP2\n"));
  std::string pcanon = kp.save_pathways();
  KnowledgeBase kp2;
  kp2.load_pathways(temp_tsv("kb_rtp2.tsv", pcanon));
  CHECK(kp2.save_pathways() == pcanon);
}

TEST_CASE("mapping functions agree with a linear scan on random KBs") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    KnowledgeBase kb;
    std::vector<Triplet> raw_triplets;
    std::vector<PathwayPair> raw_pairs;
    for (int i = 0; i < 40; ++i) {
      Triplet t{EntityId::protein("P" + std::to_string(rand_index(rng, 8))),
                "act" + std::to_string(rand_index(rng, 3)),
                EntityId::drug("D" + std::to_string(rand_index(rng, 8)))};
      kb.add_triplet(t);
      raw_triplets.push_back(t);
      EntityId a = EntityId::protein("P" + std::to_string(rand_index(rng, 8)));
      EntityId b = EntityId::protein("P" + std::to_string(rand_index(rng, 8)));
      if (!(a == b)) {
        kb.add_pathway(a, b);
        raw_pairs.push_back({a, b});
      }
    }
    for (int i = 0; i < 8; ++i) {
      EntityId d = EntityId::drug("D" + std::to_string(i));
      std::set<EntityId> want;
      for (const auto& t : raw_triplets)
        if (t.drug == d) want.insert(t.protein);
      CHECK(kb.targets_of(d) == want);

      EntityId p = EntityId::protein("P" + std::to_string(i));
      std::set<EntityId> undirected, directed;
      for (const auto& pr : raw_pairs) {
        if (pr.from == p) {
          undirected.insert(pr.to);
          directed.insert(pr.to);
        }
        if (pr.to == p) undirected.insert(pr.from);
      }
      CHECK(kb.interactors_of(p, false) == undirected);
      CHECK(kb.interactors_of(p, true) == directed);
    }
  }
}
