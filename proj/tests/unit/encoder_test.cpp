#include <gtest/gtest.h>

#include "ditto/encoder.hpp"
#include "ditto/errors.hpp"
#include "fixtures.hpp"

namespace ditto {
namespace {

using testing::fixture;
using testing::max_abs_diff;

void expect_matches_oracle(const Model& model, const std::string& oracle_dir) {
  const auto sentences = testing::oracle_sentences(oracle_dir);
  const auto oracle = read_tensor_file(fixture(oracle_dir + "/oracle.safetensors"));
  const std::size_t L = model.config.num_layers;
  const std::size_t H = model.config.num_heads;
  for (std::size_t k = 0; k < sentences.size(); ++k) {
    const auto out = forward(sentences[k].ids, model.weights, model.config);
    ASSERT_EQ(out.hidden.size(), L + 1);
    for (std::size_t l = 0; l <= L; ++l) {
      const auto& ref = oracle.at("s" + std::to_string(k) + ".hidden." + std::to_string(l));
      EXPECT_LE(max_abs_diff(out.hidden[l], ref), 1e-4) << "sentence " << k << " layer " << l;
    }
    for (std::size_t l = 1; l <= L; ++l) {
      for (std::size_t h = 1; h <= H; ++h) {
        const auto& ref =
            oracle.at("s" + std::to_string(k) + ".attention." + std::to_string(l) + "." + std::to_string(h));
        EXPECT_LE(max_abs_diff(out.attention({int(l), int(h)}), ref), 1e-4) << "sentence " << k << " head " << l
                                                                            << "-" << h;
      }
    }
  }
}

TEST(HeadRef, ParseAndValidate) {
  const auto h = HeadRef::parse("1-10");
  EXPECT_EQ(h.layer, 1);
  EXPECT_EQ(h.head, 10);
  EXPECT_EQ(h.str(), "1-10");
  for (const char* bad : {"", "1", "1-", "-1", "a-b", "1-2-3", "0-1", "1-0", "1 -2"}) {
    EXPECT_THROW(HeadRef::parse(bad), SpecError) << bad;
  }
  EXPECT_NO_THROW(HeadRef::parse("12-12").validate(12, 12));
  EXPECT_THROW(HeadRef::parse("13-1").validate(12, 12), IndexError);
  EXPECT_THROW(HeadRef::parse("1-13").validate(12, 12), IndexError);
}

TEST(Forward, MatchesReferenceActivations) { expect_matches_oracle(testing::tiny_model(), "tiny_oracle"); }

TEST(Forward, ElectraMatchesReferenceActivations) {
  expect_matches_oracle(testing::tiny_electra(), "tiny_electra_oracle");
}

TEST(Forward, AttentionRowsAreStochastic) {
  const Model& m = testing::tiny_model();
  for (const auto& s : testing::oracle_sentences("tiny_oracle")) {
    const auto out = forward(s.ids, m.weights, m.config);
    for (const auto& layer : out.attentions) {
      for (const auto& a : layer) {
        ASSERT_EQ(a.rows(), s.ids.size());
        for (std::size_t r = 0; r < a.rows(); ++r) {
          double sum = 0.0;
          for (float v : a.row(r)) sum += v;
          EXPECT_NEAR(sum, 1.0, 1e-4);
        }
      }
    }
  }
}

TEST(Forward, ThreeTokenSentenceHasInteriorDiagonal) {
  const Model& m = testing::tiny_model();
  const auto s = m.encode("big");
  ASSERT_EQ(s.n_tokens(), 3u);
  const auto out = forward(s, m);
  for (int l = 1; l <= 2; ++l) {
    for (int h = 1; h <= 2; ++h) {
      EXPECT_EQ(out.attention({l, h}).shape(), (Shape{3, 3}));
      for (float v : diagonal_attention(out, {l, h})) {
        EXPECT_GT(v, 0.0f);
        EXPECT_LT(v, 1.0f);
      }
    }
  }
  EXPECT_THROW(diagonal_attention(out, {3, 1}), IndexError);
}

TEST(Forward, TooLongAndBadIds) {
  const Model& m = testing::tiny_model();
  std::vector<TokenId> ids(m.config.max_position_embeddings + 1, 5);
  EXPECT_THROW(forward(ids, m.weights, m.config), LengthError);
  const std::vector<TokenId> bad{2, 64, 3};
  EXPECT_THROW(forward(bad, m.weights, m.config), IndexError);
}

TEST(Forward, EmbeddingOutputIgnoresEncoderLayers) {
  const Model& m = testing::tiny_model();
  ModelWeights zeroed = m.weights;
  for (auto& layer : zeroed.layers) {
    for (auto* lin : {&layer.query, &layer.key, &layer.value, &layer.attention_output, &layer.ffn_in, &layer.ffn_out}) {
      std::fill(lin->weight.data().begin(), lin->weight.data().end(), 0.0f);
      std::fill(lin->bias.data().begin(), lin->bias.data().end(), 0.0f);
    }
  }
  for (const auto& s : testing::oracle_sentences("tiny_oracle")) {
    const auto a = forward(s.ids, m.weights, m.config);
    const auto b = forward(s.ids, zeroed, m.config);
    EXPECT_EQ(a.hidden[0], b.hidden[0]);
    EXPECT_NE(a.hidden[2], b.hidden[2]);
  }
}

TEST(ForwardBatch, PaddingInvariance) {
  const Model& m = testing::tiny_model();
  std::vector<TokenizedSentence> batch;
  for (const auto& s : testing::oracle_sentences("tiny_oracle")) batch.push_back(m.encode(s.text));
  const auto outs = forward_batch(batch, m);
  ASSERT_EQ(outs.size(), batch.size());
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const auto single = forward(batch[k], m);
    ASSERT_EQ(outs[k].n_tokens, batch[k].n_tokens());
    for (std::size_t l = 0; l < single.hidden.size(); ++l) {
      EXPECT_LE(max_abs_diff(outs[k].hidden[l], single.hidden[l]), 1e-4);
      // The kernels accumulate masked columns as exact zeros, so padding is bit-exact.
      EXPECT_EQ(outs[k].hidden[l], single.hidden[l]);
    }
    for (std::size_t l = 0; l < single.attentions.size(); ++l) {
      for (std::size_t h = 0; h < single.attentions[l].size(); ++h) {
        EXPECT_LE(max_abs_diff(outs[k].attentions[l][h], single.attentions[l][h]), 1e-4);
      }
    }
  }
}

TEST(ForwardBatch, EmptyAndSingleAndThreadCount) {
  const Model& m = testing::tiny_model();
  EXPECT_TRUE(forward_batch(std::span<const TokenizedSentence>{}, m).empty());
  const auto s = m.encode("the cat sat on the mat.");
  const std::vector<TokenizedSentence> one{s};
  const auto b = forward_batch(one, m);
  const auto f = forward(s, m);
  EXPECT_EQ(b[0].hidden, f.hidden);
  EXPECT_EQ(b[0].attentions, f.attentions);

  std::vector<TokenizedSentence> many;
  for (const auto& t : testing::read_lines(fixture("corpus.txt"))) many.push_back(m.encode(t));
  BatchOptions serial, parallel;
  parallel.threads = 4;
  const auto x = forward_batch(many, m, serial);
  const auto y = forward_batch(many, m, parallel);
  for (std::size_t k = 0; k < many.size(); ++k) EXPECT_EQ(x[k].hidden, y[k].hidden);
}

TEST(ForwardBatch, WithoutAttentions) {
  const Model& m = testing::tiny_model();
  const std::vector<TokenizedSentence> one{m.encode("a dog")};
  BatchOptions opts;
  opts.forward.keep_attentions = false;
  const auto out = forward_batch(one, m, opts);
  EXPECT_TRUE(out[0].attentions.empty());
  EXPECT_EQ(out[0].hidden.size(), 3u);
}

}  // namespace
}  // namespace ditto
