#include <gtest/gtest.h>

#include "hspp/gt_matcher.hpp"
#include "hspp/pipeline.hpp"
#include "hspp/synth.hpp"
#include "test_util.hpp"

using namespace hspp;
using hspp::testing::annotate;

namespace {

Lexicons car_lexicon() {
  return Lexicons::from_json_text(R"({"objects": ["car", "building", "automobile"],
    "attributes": {"color": ["red", "blue"], "size": ["tall"]},
    "relations": ["park-next-to"], "symmetric_relations": ["next-to", "beside"],
    "synonyms": [["car", "automobile"]]})");
}

AnnotatedText red_car_caption() {
  return annotate({{{"a", "a", "DET", 2, "det", true},
                    {"red", "red", "ADJ", 2, "amod"},
                    {"car", "car", "NOUN", 3, "nsubj"},
                    {"parked", "park", "VERB", -1, "ROOT"},
                    {"next", "next", "ADP", 7, "case", true},
                    {"to", "to", "ADP", 4, "fixed", true},
                    {"a", "a", "DET", 7, "det", true},
                    {"building", "building", "NOUN", 3, "obl"}}});
}

GroundTruthSet gt_of(std::set<std::string> objects, std::set<AttributePair> attributes = {},
                     std::set<RelationTriplet> relations = {}) {
  GroundTruthSet gt;
  gt.objects = std::move(objects);
  gt.attributes = std::move(attributes);
  gt.relations = std::move(relations);
  return gt;
}

SemanticChunk chunk(ChunkType type, std::vector<std::string> payload) { return {type, 0, 0, std::move(payload)}; }

}  // namespace

TEST(GroundTruth, RedCarCaption) {
  const auto gt = extract_ground_truth({red_car_caption()}, car_lexicon());
  EXPECT_TRUE(gt.objects.count("car"));
  EXPECT_TRUE(gt.objects.count("building"));
  EXPECT_TRUE(gt.attributes.count({"car", "red"}));
  EXPECT_TRUE(gt.relations.count({"car", "park-next-to", "building"}));
  ASSERT_EQ(gt.source_captions.size(), 1u);
}

TEST(GroundTruth, NoAdjectivesNoAttributes) {
  const auto caption = annotate({{{"a", "a", "DET", 1, "det", true}, {"dog", "dog", "NOUN", -1, "ROOT"}}});
  EXPECT_TRUE(extract_ground_truth({caption}, car_lexicon()).attributes.empty());
}

TEST(GroundTruth, DuplicateMentionsCollapse) {
  const auto gt = extract_ground_truth({red_car_caption(), red_car_caption()}, car_lexicon());
  EXPECT_EQ(gt.objects.count("car"), 1u);
  EXPECT_EQ(gt.objects.size(), 2u);
}

TEST(GroundTruth, OutOfVocabularyObjectsAdmitted) {
  const auto caption = annotate({{{"a", "a", "DET", 1, "det", true}, {"giraffe", "giraffe", "NOUN", -1, "ROOT"}}});
  EXPECT_TRUE(extract_ground_truth({caption}, car_lexicon()).objects.count("giraffe"));
}

TEST(GroundTruth, EmptyCaptionSetIsAnError) { EXPECT_THROW(extract_ground_truth({}, car_lexicon()), Error); }

TEST(GroundTruth, EntriesAreLowercaseAndClosed) {
  const auto caption = annotate({{{"Rex", "Rex", "PROPN", 1, "nsubj"},
                                  {"chases", "chase", "VERB", -1, "ROOT"},
                                  {"Cars", "Car", "NOUN", 1, "obj"}}});
  const auto gt = extract_ground_truth({caption}, car_lexicon());
  EXPECT_TRUE(gt.objects.count("rex"));
  EXPECT_TRUE(gt.relations.count({"rex", "chase", "car"}));
  for (const auto& [a, r, b] : gt.relations) {
    EXPECT_TRUE(gt.objects.count(a));
    EXPECT_TRUE(gt.objects.count(b));
  }
}

TEST(Match, Rules) {
  const auto lex = car_lexicon();
  EXPECT_TRUE(match("automobile", {"car"}, lex));
  EXPECT_FALSE(match("dog", {"car", "building"}, Lexicons{}));
  EXPECT_TRUE(match(lowercase("Car"), {"car"}, lex));
  EXPECT_FALSE(match("red", {"blue"}, lex));  // same category is not equivalence
}

TEST(Classify, ObjectBranch) {
  const auto lex = car_lexicon();
  const auto gt = gt_of({"car", "building"});
  EXPECT_EQ(classify_chunk(chunk(ChunkType::Object, {"dog"}), gt, lex), HallucinationLabel::Category);
  EXPECT_EQ(classify_chunk(chunk(ChunkType::Object, {"automobile"}), gt, lex), HallucinationLabel::Correct);
}

TEST(Classify, AttributeBranchAndPrecedence) {
  const auto lex = car_lexicon();
  const auto gt = gt_of({"car", "building"}, {{"car", "red"}});
  EXPECT_EQ(classify_chunk(chunk(ChunkType::Attribute, {"blue", "car"}), gt, lex), HallucinationLabel::Attribute);
  EXPECT_EQ(classify_chunk(chunk(ChunkType::Attribute, {"blue", "dog"}), gt, lex), HallucinationLabel::Category);
  EXPECT_EQ(classify_chunk(chunk(ChunkType::Attribute, {"red", "car"}), gt, lex), HallucinationLabel::Correct);
  // A true attribute attached to the wrong object.
  EXPECT_EQ(classify_chunk(chunk(ChunkType::Attribute, {"red", "building"}), gt, lex), HallucinationLabel::Attribute);
}

TEST(Classify, RelationBranchAndPrecedence) {
  const auto lex = car_lexicon();
  const auto gt = gt_of({"car", "building"}, {}, {{"car", "park-next-to", "building"}});
  EXPECT_EQ(classify_chunk(chunk(ChunkType::Relation, {"car", "park-next-to", "building"}), gt, lex),
            HallucinationLabel::Correct);
  EXPECT_EQ(classify_chunk(chunk(ChunkType::Relation, {"automobile", "park-next-to", "building"}), gt, lex),
            HallucinationLabel::Correct);
  EXPECT_EQ(classify_chunk(chunk(ChunkType::Relation, {"car", "park-behind", "building"}), gt, lex),
            HallucinationLabel::Relation);
  EXPECT_EQ(classify_chunk(chunk(ChunkType::Relation, {"car", "park-next-to", "dog"}), gt, lex),
            HallucinationLabel::Category);
  EXPECT_EQ(classify_chunk(chunk(ChunkType::Relation, {"dog", "park-behind", "car"}), gt, lex),
            HallucinationLabel::Category);
}

TEST(Classify, SymmetricRelationsAcceptReversal) {
  const auto lex = car_lexicon();
  const auto gt = gt_of({"car", "building"}, {}, {{"car", "park-next-to", "building"}, {"car", "behind", "building"}});
  EXPECT_EQ(classify_chunk(chunk(ChunkType::Relation, {"building", "park-next-to", "car"}), gt, lex),
            HallucinationLabel::Correct);
  EXPECT_EQ(classify_chunk(chunk(ChunkType::Relation, {"building", "behind", "car"}), gt, lex),
            HallucinationLabel::Relation);
  EXPECT_TRUE(lex.is_symmetric("beside"));
  EXPECT_TRUE(lex.is_symmetric("stand-beside"));
  EXPECT_FALSE(lex.is_symmetric("stand-behind"));
  EXPECT_FALSE(lex.is_symmetric("besides"));
}

TEST(Classify, PrecedenceHoldsForEveryAbsentObject) {
  const auto lex = car_lexicon();
  const auto gt = gt_of({"car"}, {{"car", "red"}}, {{"car", "near", "car"}});
  for (const auto& payload : std::vector<std::vector<std::string>>{{"red", "ghost"}, {"blue", "ghost"}}) {
    EXPECT_EQ(classify_chunk(chunk(ChunkType::Attribute, payload), gt, lex), HallucinationLabel::Category);
  }
  for (const auto& payload : std::vector<std::vector<std::string>>{
           {"ghost", "near", "car"}, {"car", "near", "ghost"}, {"ghost", "on", "ghost"}}) {
    EXPECT_EQ(classify_chunk(chunk(ChunkType::Relation, payload), gt, lex), HallucinationLabel::Category);
  }
}

TEST(Classify, SelfConsistencyOnSyntheticDescriptions) {
  const auto assets = Assets::load();
  for (auto profile : kAllProfiles) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto s = synthesize_sample(seed, profile);
      const auto gt = extract_ground_truth(split_captions(s.description), assets.lexicons);
      for (const auto& c : extract_chunks(s.description, assets.stopwords)) {
        EXPECT_EQ(classify_chunk(c, gt, assets.lexicons), HallucinationLabel::Correct);
      }
    }
  }
}

TEST(Classify, IndependentOfCaptionOrder) {
  const auto assets = Assets::load();
  const auto s = synthesize_sample(3, FailureProfile::ConfDecay);
  auto captions = split_captions(s.ground_truth);
  const auto forward = extract_ground_truth(captions, assets.lexicons);
  std::reverse(captions.begin(), captions.end());
  const auto backward = extract_ground_truth(captions, assets.lexicons);
  for (const auto& c : extract_chunks(s.description, assets.stopwords)) {
    EXPECT_EQ(classify_chunk(c, forward, assets.lexicons), classify_chunk(c, backward, assets.lexicons));
  }
}

TEST(Lexicons, ShippedAssetsValidate) {
  const auto lex = Assets::load().lexicons;
  EXPECT_NO_THROW(lex.validate());
  EXPECT_TRUE(lex.are_synonyms("sofa", "couch"));
  EXPECT_TRUE(lex.are_synonyms("couch", "sofa"));
  EXPECT_EQ(lex.attribute_categories.size(), 6u);
}

TEST(Lexicons, OverlappingCategoriesRejected) {
  EXPECT_THROW(Lexicons::from_json_text(R"({"attributes": {"color": ["red"], "condition": ["red"]}})").validate(),
               Error);
}

TEST(Lexicons, SynonymGroupsAreSymmetricClosures) {
  Lexicons lex;
  lex.add_synonym_group({"a", "b", "c"});
  EXPECT_TRUE(lex.are_synonyms("c", "a"));
  EXPECT_TRUE(lex.are_synonyms("b", "c"));
  EXPECT_FALSE(lex.are_synonyms("a", "d"));
  EXPECT_NO_THROW(lex.validate());
}
