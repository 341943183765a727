// Copyright 2026 The probesearch Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "probesearch/synthetic_backend.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "lexicon.hpp"
#include "probesearch/error.hpp"
#include "probesearch/random.hpp"
#include "probesearch/vocabulary.hpp"

namespace probesearch {
namespace {

constexpr std::uint64_t kPrefixSalt = 0x70726566697821ULL;
constexpr std::uint64_t kNoiseSalt = 0x6e6f697365ULL;
constexpr std::uint64_t kSlipSalt = 0x736c6970ULL;
constexpr std::uint64_t kGuessSalt = 0x6775657373ULL;
constexpr std::uint64_t kRankSalt = 0x72616e6bULL;

// Root fan-out: three reasoning openers among the ten most likely first
// tokens, one of them in the top three, the greedy token always direct.
constexpr int kRootListSize = 10;

enum class WordClass : std::uint8_t {
  kOther,
  kName,
  kObject,
  kGain,
  kLoss,
  kStarter,
  kSwitch,
  kFiller,
  kLead,
};

struct Lexicon {
  TokenId eos, question, answer, period, comma;
  TokenId starts, with, next, plus, minus, equals, so, the, answer_word, is, therefore;
  TokenId has, now;
  std::vector<TokenId> names, objects, starters, switches, fillers, leads;
  std::vector<WordClass> classes;

  static const Lexicon& Get() {
    static const Lexicon lex;
    return lex;
  }

  WordClass ClassOf(TokenId t) const {
    return (t >= 0 && static_cast<std::size_t>(t) < classes.size())
               ? classes[static_cast<std::size_t>(t)]
               : WordClass::kOther;
  }
  bool OpensReasoning(TokenId t) const {
    const auto c = ClassOf(t);
    return c == WordClass::kStarter || c == WordClass::kSwitch;
  }

 private:
  Lexicon() {
    const auto& v = Vocabulary::Default();
    eos = v.eos();
    question = v.Id("Question:");
    answer = v.Id("Answer:");
    period = v.Id(".");
    comma = v.Id(",");
    starts = v.Id("starts");
    with = v.Id("with");
    next = v.Id("next");
    plus = v.Id("plus");
    minus = v.Id("minus");
    equals = v.Id("equals");
    so = v.Id("so");
    the = v.Id("the");
    answer_word = v.Id("answer");
    is = v.Id("is");
    therefore = v.Id("Therefore");
    has = v.Id("has");
    now = v.Id("now");
    classes.assign(static_cast<std::size_t>(v.size()), WordClass::kOther);
    auto fill = [&](const auto& group, WordClass c, std::vector<TokenId>* ids) {
      for (auto w : group) {
        const TokenId id = v.Id(w);
        classes[static_cast<std::size_t>(id)] = c;
        if (ids) ids->push_back(id);
      }
    };
    fill(lexicon::kNames, WordClass::kName, &names);
    fill(lexicon::kObjects, WordClass::kObject, &objects);
    fill(lexicon::kGainVerbs, WordClass::kGain, nullptr);
    fill(lexicon::kLossVerbs, WordClass::kLoss, nullptr);
    fill(lexicon::kCotStarters, WordClass::kStarter, &starters);
    fill(lexicon::kCotSwitches, WordClass::kSwitch, &switches);
    fill(lexicon::kCotFillers, WordClass::kFiller, &fillers);
    fill(lexicon::kDirectLeads, WordClass::kLead, &leads);
  }
};

struct ProblemContext {
  std::vector<long> operands;
  long gold = 0;
  long trap = 0;
  TokenId name = 0;
  TokenId object = 0;
};

ProblemContext ParseQuestion(std::span<const TokenId> question) {
  const auto& lex = Lexicon::Get();
  const auto& vocab = Vocabulary::Default();
  ProblemContext ctx;
  ctx.name = lex.names.front();
  ctx.object = lex.objects.front();
  bool have_name = false, have_object = false;
  long sign = 1;
  for (TokenId t : question) {
    const auto c = lex.ClassOf(t);
    if (t == lex.period) {
      sign = 1;
    } else if (c == WordClass::kLoss) {
      sign = -1;
    } else if (c == WordClass::kGain) {
      sign = 1;
    } else if (c == WordClass::kName && !have_name) {
      ctx.name = t;
      have_name = true;
    } else if (c == WordClass::kObject && !have_object) {
      ctx.object = t;
      have_object = true;
    } else if (vocab.IsNumeral(t)) {
      ctx.operands.push_back(sign * vocab.NumeralValue(t));
    }
  }
  long abs_sum = 0;
  for (long x : ctx.operands) {
    ctx.gold += x;
    abs_sum += std::abs(x);
  }
  // The classic slip: every quantity added, losses included.
  ctx.trap = abs_sum != ctx.gold ? abs_sum : ctx.gold + 10;
  return ctx;
}

enum class Phase { kOpen, kIntro, kStep, kClosing, kDirectBody, kTrigger, kEnded };

enum class SlotKind {
  kWord,
  kStartValue,
  kCurValue,
  kOperand,
  kResult,
  kRestate,
  kCotAnswer,
  kDirectAnswer,
  kCommitted,
  kEos,
};

struct Slot {
  SlotKind kind;
  TokenId word = 0;
};

constexpr int kIntroLength = 7;
constexpr int kStepLength = 13;
constexpr int kAnswerLength = 7;  // closing, direct body and trigger share it

template <typename T, typename Rng>
void ShuffleInPlace(std::vector<T>& v, Rng& rng) {
  // Fisher-Yates with an explicit bound so the order does not depend on the
  // standard library's shuffle implementation.
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

struct SyntheticBackend::Automaton {
  const SyntheticBackend& backend;
  ProblemContext ctx;
  double p_slip = 0.0;

  Mode mode = Mode::kUndecided;
  Phase phase = Phase::kOpen;
  int pc = 0;
  std::size_t step = 1;
  long value = 0;
  std::optional<long> stated;
  Phase resume_phase = Phase::kOpen;
  int resume_pc = 0;
  std::uint64_t hash = 0;

  // Scans `prefix`. When `modes`/`hashes` are given, records per-token mode
  // and position hash (prompt tokens report kPrompt).
  Automaton(const SyntheticBackend& b, std::span<const TokenId> prefix,
            std::vector<Mode>* modes = nullptr, std::vector<std::uint64_t>* hashes = nullptr)
      : backend(b) {
    const auto& lex = Lexicon::Get();
    hash = HashCombine(b.world_->seed, kPrefixSalt);
    std::size_t response_begin = 0;
    auto answer_it = std::find(prefix.rbegin(), prefix.rend(), lex.answer);
    if (answer_it != prefix.rend()) {
      const std::size_t answer_pos =
          static_cast<std::size_t>(std::distance(answer_it, prefix.rend())) - 1;
      auto question_begin = prefix.begin();
      auto q_it = std::find(std::make_reverse_iterator(prefix.begin() + static_cast<std::ptrdiff_t>(answer_pos)),
                            prefix.rend(), lex.question);
      if (q_it != prefix.rend()) question_begin = q_it.base();
      ctx = ParseQuestion(std::span<const TokenId>(
          question_begin, prefix.begin() + static_cast<std::ptrdiff_t>(answer_pos)));
      response_begin = answer_pos + 1;
    } else {
      ctx = ParseQuestion({});
    }
    const std::size_t steps = ctx.operands.size() > 1 ? ctx.operands.size() - 1 : 0;
    if (steps > 0) p_slip = 1.0 - std::pow(b.world_->q_cot, 1.0 / static_cast<double>(steps));
    value = ctx.operands.empty() ? 0 : ctx.operands.front();

    for (std::size_t i = 0; i < prefix.size(); ++i) {
      if (i < response_begin) {
        hash = HashCombine(hash, static_cast<std::uint64_t>(prefix[i]));
        if (modes) modes->push_back(Mode::kPrompt);
      } else {
        Consume(prefix[i]);
        if (modes) modes->push_back(mode);
      }
      if (hashes) hashes->push_back(hash);
    }
  }

  long Operand(std::size_t s) const {
    return s < ctx.operands.size() ? ctx.operands[s] : 0;
  }

  Slot SlotAt(Phase ph, int at) const {
    const auto& lex = Lexicon::Get();
    switch (ph) {
      case Phase::kIntro: {
        static constexpr SlotKind kinds[] = {SlotKind::kWord, SlotKind::kWord,
                                             SlotKind::kWord, SlotKind::kWord,
                                             SlotKind::kStartValue, SlotKind::kWord,
                                             SlotKind::kWord};
        const TokenId words[] = {lex.comma, ctx.name, lex.starts, lex.with, 0,
                                 ctx.object, lex.period};
        return {kinds[at], words[at]};
      }
      case Phase::kStep: {
        const long x = Operand(step);
        switch (at) {
          case 0: return {SlotKind::kWord, lex.next};
          case 1: return {SlotKind::kCurValue};
          case 2: return {SlotKind::kWord, x < 0 ? lex.minus : lex.plus};
          case 3: return {SlotKind::kOperand};
          case 4: return {SlotKind::kWord, lex.equals};
          case 5: return {SlotKind::kResult};
          case 6: return {SlotKind::kWord, lex.comma};
          case 7: return {SlotKind::kWord, ctx.name};
          case 8: return {SlotKind::kWord, lex.now};
          case 9: return {SlotKind::kWord, lex.has};
          case 10: return {SlotKind::kRestate};
          case 11: return {SlotKind::kWord, ctx.object};
          default: return {SlotKind::kWord, lex.period};
        }
      }
      case Phase::kClosing:
      case Phase::kDirectBody:
      case Phase::kTrigger: {
        const TokenId lead = ph == Phase::kClosing ? lex.so : lex.comma;
        const SlotKind answer_kind = ph == Phase::kClosing      ? SlotKind::kCotAnswer
                                     : ph == Phase::kDirectBody ? SlotKind::kDirectAnswer
                                                                : SlotKind::kCommitted;
        switch (at) {
          case 0: return {SlotKind::kWord, lead};
          case 1: return {SlotKind::kWord, lex.the};
          case 2: return {SlotKind::kWord, lex.answer_word};
          case 3: return {SlotKind::kWord, lex.is};
          case 4: return {answer_kind};
          case 5: return {SlotKind::kWord, lex.period};
          default: return {SlotKind::kEos};
        }
      }
      case Phase::kOpen:
      case Phase::kEnded:
        break;
    }
    return {SlotKind::kEos};
  }

  long Slip(std::uint64_t h) const {
    SplitMix64 rng(HashCombine(h, kSlipSalt));
    if (rng.NextDouble() >= p_slip) return 0;
    const long magnitude = 1 + static_cast<long>(rng() % 3);
    return (rng() & 1) ? magnitude : -magnitude;
  }

  long DirectGuess(std::uint64_t h) const {
    SplitMix64 rng(HashCombine(h, kGuessSalt));
    if (rng.NextDouble() < backend.world_->q_direct) return ctx.gold;
    if (rng.NextDouble() < 0.6) return ctx.trap;
    const long offset = 1 + static_cast<long>(rng() % 5);
    return (rng() & 1) ? ctx.gold + offset : ctx.gold - offset;
  }

  // The answer the model gives when prompted with the trigger phrase.
  long Committed() const {
    if (stated) return *stated;
    if (mode != Mode::kCot) return DirectGuess(hash);
    long v = value;
    std::size_t from = ctx.operands.size();
    switch (resume_phase) {
      case Phase::kIntro:
        v = Operand(0);
        from = 1;
        break;
      case Phase::kStep:
        from = resume_pc > 5 ? step + 1 : step;
        break;
      default:
        break;
    }
    for (std::size_t s = from; s < ctx.operands.size(); ++s) {
      v += Operand(s) + Slip(HashCombine(hash, s));
    }
    return v;
  }

  TokenId Expected() const {
    const auto& vocab = Vocabulary::Default();
    if (phase == Phase::kOpen) return RootList().front();
    if (phase == Phase::kEnded) return Lexicon::Get().eos;
    const Slot slot = SlotAt(phase, pc);
    switch (slot.kind) {
      case SlotKind::kWord:
        return slot.word;
      case SlotKind::kStartValue:
        return vocab.Numeral(Operand(0));
      case SlotKind::kCurValue:
      case SlotKind::kRestate:
      case SlotKind::kCotAnswer:
        return vocab.Numeral(value);
      case SlotKind::kOperand:
        return vocab.Numeral(std::abs(Operand(step)));
      case SlotKind::kResult:
        return vocab.Numeral(value + Operand(step) + Slip(hash));
      case SlotKind::kDirectAnswer:
        return vocab.Numeral(DirectGuess(hash));
      case SlotKind::kCommitted:
        return vocab.Numeral(Committed());
      case SlotKind::kEos:
        return Lexicon::Get().eos;
    }
    return Lexicon::Get().eos;
  }

  std::vector<TokenId> RootList() const {
    const auto& lex = Lexicon::Get();
    SplitMix64 rng(HashCombine(hash, kRankSalt));
    std::vector<TokenId> leads = lex.leads;
    std::vector<TokenId> starters = lex.starters;
    ShuffleInPlace(leads, rng);
    ShuffleInPlace(starters, rng);
    // One reasoning opener at rank 1 or 2, two more somewhere in ranks 3-9;
    // rank 0 is always a direct lead so greedy decoding answers directly.
    std::vector<std::size_t> tail{3, 4, 5, 6, 7, 8, 9};
    ShuffleInPlace(tail, rng);
    const std::size_t cot_ranks[] = {1 + static_cast<std::size_t>(rng() % 2), tail[0], tail[1]};
    std::vector<TokenId> list(kRootListSize);
    std::size_t next_lead = 0;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto* hit = std::find(std::begin(cot_ranks), std::end(cot_ranks), i);
      list[i] = hit != std::end(cot_ranks) ? starters[static_cast<std::size_t>(hit - cot_ranks)]
                                           : leads[next_lead++];
    }
    return list;
  }

  // Most probable tokens in order; the remainder of the vocabulary follows
  // by ascending id.
  std::vector<TokenId> DesignedList() const {
    if (phase == Phase::kOpen) return RootList();
    const auto& lex = Lexicon::Get();
    std::vector<TokenId> list{Expected()};
    std::vector<TokenId> alternatives;
    SplitMix64 rng(HashCombine(hash, kRankSalt));
    if (phase == Phase::kIntro || phase == Phase::kStep || phase == Phase::kClosing) {
      std::vector<TokenId> fillers = lex.fillers, leads = lex.leads;
      ShuffleInPlace(fillers, rng);
      ShuffleInPlace(leads, rng);
      alternatives.assign(fillers.begin(), fillers.begin() + 2);
      alternatives.insert(alternatives.end(), leads.begin(), leads.begin() + 7);
    } else if (phase == Phase::kDirectBody) {
      std::vector<TokenId> switches = lex.switches, leads = lex.leads;
      ShuffleInPlace(switches, rng);
      ShuffleInPlace(leads, rng);
      alternatives.push_back(switches.front());
      alternatives.insert(alternatives.end(), leads.begin(), leads.begin() + 8);
    }
    ShuffleInPlace(alternatives, rng);
    for (TokenId t : alternatives) {
      if (t != list.front()) list.push_back(t);
    }
    return list;
  }

  void StartReasoning() {
    mode = Mode::kCot;
    phase = Phase::kIntro;
    pc = 0;
    step = 1;
    value = Operand(0);
    stated.reset();
  }

  void Advance() {
    ++pc;
    if (phase == Phase::kIntro && pc == kIntroLength) {
      pc = 0;
      phase = ctx.operands.size() >= 2 ? Phase::kStep : Phase::kClosing;
    } else if (phase == Phase::kStep && pc == kStepLength) {
      pc = 0;
      if (++step >= ctx.operands.size()) phase = Phase::kClosing;
    }
  }

  void Transition(TokenId t) {
    const auto& lex = Lexicon::Get();
    const auto& vocab = Vocabulary::Default();
    if (t == lex.eos) {
      phase = Phase::kEnded;
      return;
    }
    if (t == lex.therefore) {
      if (phase != Phase::kTrigger) {
        resume_phase = phase;
        resume_pc = pc;
      }
      phase = Phase::kTrigger;
      pc = 0;
      return;
    }
    if (phase == Phase::kEnded) return;
    const WordClass c = lex.ClassOf(t);
    if (phase == Phase::kOpen) {
      if (lex.OpensReasoning(t)) {
        StartReasoning();
      } else if (c == WordClass::kLead) {
        mode = Mode::kDirect;
        phase = Phase::kDirectBody;
        pc = 0;
      } else if (vocab.IsNumeral(t)) {
        mode = Mode::kDirect;
        phase = Phase::kDirectBody;
        stated = vocab.NumeralValue(t);
        pc = 5;
      }
      return;
    }
    const Slot slot = SlotAt(phase, pc);
    if (slot.kind == SlotKind::kWord && t == slot.word) {
      Advance();
      return;
    }
    if (slot.kind != SlotKind::kWord && slot.kind != SlotKind::kEos && vocab.IsNumeral(t)) {
      const long v = vocab.NumeralValue(t);
      switch (slot.kind) {
        case SlotKind::kStartValue:
        case SlotKind::kCurValue:
        case SlotKind::kResult:
        case SlotKind::kRestate:
          value = v;
          break;
        case SlotKind::kCotAnswer:
        case SlotKind::kDirectAnswer:
        case SlotKind::kCommitted:
          stated = v;
          break;
        default:
          break;
      }
      Advance();
      return;
    }
    if (phase == Phase::kTrigger) return;
    if (mode == Mode::kDirect && lex.OpensReasoning(t)) {
      StartReasoning();
    } else if (mode == Mode::kCot && c == WordClass::kLead) {
      mode = Mode::kDirect;
      phase = Phase::kDirectBody;
      pc = 0;
    }
    // Anything else is a filler: state unchanged.
  }

  void Consume(TokenId t) {
    Transition(t);
    hash = HashCombine(hash, static_cast<std::uint64_t>(t));
  }
};

std::pair<std::vector<double>, std::vector<double>> SyntheticWorld::MeansFor(
    int layer, RepType type) const {
  if (layer < 0 || layer >= params.num_layers) {
    throw Error(ErrorCode::kInvalidInput, "layer " + std::to_string(layer) +
                                              " outside [0, " +
                                              std::to_string(params.num_layers) + ")");
  }
  if (layer == params.peak_layer && type == RepType::kHiddenState) return {mu_pos, mu_neg};
  const double spread = 3.0;
  const double distance = static_cast<double>(layer - params.peak_layer) / spread;
  double factor = std::max(0.05, std::exp(-distance * distance));
  std::size_t rotate = 0;
  switch (type) {
    case RepType::kHiddenState:
      break;
    case RepType::kAttentionActivation:
      factor *= 0.6;
      rotate = 5;
      break;
    case RepType::kMlpActivation:
      factor *= 0.8;
      rotate = 11;
      break;
  }
  const std::size_t dim = mu_pos.size();
  std::vector<double> pos(dim), neg(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    const std::size_t src = (d + rotate) % dim;
    const double mid = 0.5 * (mu_pos[src] + mu_neg[src]);
    const double half = 0.5 * (mu_pos[src] - mu_neg[src]);
    pos[d] = mid + factor * half;
    neg[d] = mid - factor * half;
  }
  return {pos, neg};
}

std::string RenderQuestion(const std::vector<long>& operands, std::size_t name_index,
                           std::size_t object_index) {
  const std::string name(lexicon::kNames[name_index % lexicon::kNames.size()]);
  const std::string object(lexicon::kObjects[object_index % lexicon::kObjects.size()]);
  std::string q;
  for (std::size_t i = 0; i < operands.size(); ++i) {
    const long x = operands[i];
    if (i == 0) {
      q += name + " has " + std::to_string(x) + " " + object + ".";
      continue;
    }
    q += " " + name + " ";
    if (x >= 0) {
      q += std::string(lexicon::kGainVerbs[i % lexicon::kGainVerbs.size()]) + " " +
           std::to_string(x) + " more " + object + ".";
    } else {
      const auto verb = lexicon::kLossVerbs[i % lexicon::kLossVerbs.size()];
      q += std::string(verb) + (verb == "gives" ? " away " : " ") + std::to_string(-x) +
           " " + object + ".";
    }
  }
  q += " How many " + object + " does " + name + " have now?";
  return q;
}

SyntheticWorld NewSyntheticWorld(const SyntheticWorldParams& params, std::uint64_t seed) {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::kInvalidInput, what); };
  if (params.num_problems < 0) bad("num_problems must be >= 0");
  if (params.min_operands < 2 || params.max_operands < params.min_operands) {
    bad("operand counts must satisfy 2 <= min <= max");
  }
  if (params.min_value < 1 || params.max_value < params.min_value ||
      params.max_value * params.max_operands > Vocabulary::kMaxNumeral / 2) {
    bad("operand values out of range");
  }
  if (params.dim < 1) bad("dim must be >= 1");
  if (!(params.separation > 0.0)) bad("mode means must differ");
  const double sigma = params.sigma.value_or(0.5 * params.separation);
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) bad("sigma must be >= 0");
  if (!(params.q_direct >= 0.0 && params.q_direct < params.q_cot && params.q_cot <= 1.0)) {
    bad("need 0 <= q_direct < q_cot <= 1");
  }
  if (params.num_layers < 1 || params.peak_layer < 0 ||
      params.peak_layer >= params.num_layers) {
    bad("peak_layer must lie in [0, num_layers)");
  }

  SyntheticWorld world;
  world.params = params;
  world.params.sigma = sigma;
  world.sigma = sigma;
  world.q_cot = params.q_cot;
  world.q_direct = params.q_direct;
  world.seed = seed;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto dim = static_cast<std::size_t>(params.dim);
  std::vector<double> mid(dim), direction(dim);
  for (auto& m : mid) m = normal(rng);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& u : direction) {
      u = normal(rng);
      norm += u * u;
    }
    norm = std::sqrt(norm);
  } while (norm < 1e-9);
  world.mu_pos.resize(dim);
  world.mu_neg.resize(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    const double half = 0.5 * params.separation * direction[d] / norm;
    world.mu_pos[d] = mid[d] + half;
    world.mu_neg[d] = mid[d] - half;
  }

  std::uniform_int_distribution<int> count(params.min_operands, params.max_operands);
  std::uniform_int_distribution<long> magnitude(params.min_value, params.max_value);
  std::uniform_int_distribution<std::size_t> name(0, lexicon::kNames.size() - 1);
  std::uniform_int_distribution<std::size_t> object(0, lexicon::kObjects.size() - 1);
  std::bernoulli_distribution lose(0.5);
  for (int p = 0; p < params.num_problems; ++p) {
    SyntheticProblem problem;
    const int n = count(rng);
    long running = 0;
    for (int i = 0; i < n; ++i) {
      const long x = magnitude(rng);
      const bool subtract = i > 0 && running >= x && lose(rng);
      const long signed_x = subtract ? -x : x;
      problem.operands.push_back(signed_x);
      running += signed_x;
    }
    problem.gold = static_cast<double>(running);
    problem.question = RenderQuestion(problem.operands, name(rng), object(rng));
    world.problems.push_back(std::move(problem));
  }
  return world;
}

bool GradeAnswer(const SyntheticWorld& world, std::string_view question, double candidate) {
  for (const auto& p : world.problems) {
    if (p.question == question) return AnswersMatch(candidate, p.gold);
  }
  throw Error(ErrorCode::kInvalidInput, "question not in the world's problem set");
}

SyntheticBackend::SyntheticBackend(std::shared_ptr<const SyntheticWorld> world)
    : SyntheticBackend(world, world->params.peak_layer, RepType::kHiddenState) {}

SyntheticBackend::SyntheticBackend(std::shared_ptr<const SyntheticWorld> world, int layer,
                                   RepType type)
    : world_(std::move(world)) {
  if (!world_) throw Error(ErrorCode::kInvalidInput, "null world");
  auto [pos, neg] = world_->MeansFor(layer, type);
  mean_pos_ = std::move(pos);
  mean_neg_ = std::move(neg);
  mean_mid_.resize(mean_pos_.size());
  for (std::size_t d = 0; d < mean_mid_.size(); ++d) {
    mean_mid_[d] = 0.5 * (mean_pos_[d] + mean_neg_[d]);
  }
  const auto& vocab = Vocabulary::Default();
  info_.vocab_size = vocab.size();
  info_.dim = static_cast<int>(mean_pos_.size());
  info_.eos_token = vocab.eos();
  info_.layer = layer;
  info_.rep_type = type;
  info_.num_layers = world_->params.num_layers;
  info_.model_name = "synthetic-arithmetic-v1";
  info_.single_flight = false;
}

RepresentationVector SyntheticBackend::MakeRep(Mode mode, std::uint64_t position_hash) const {
  const std::vector<double>& mean = mode == Mode::kCot      ? mean_pos_
                                    : mode == Mode::kPrompt ? mean_mid_
                                                            : mean_neg_;
  RepresentationVector rep{mean, info_.layer, info_.rep_type};
  if (world_->sigma > 0.0) {
    SplitMix64 rng(HashCombine(position_hash, kNoiseSalt));
    std::normal_distribution<double> normal(0.0, 1.0);
    const double scale = world_->sigma / std::sqrt(static_cast<double>(mean.size()));
    for (auto& v : rep.values) v += scale * normal(rng);
  }
  return rep;
}

namespace {
void ValidatePrefix(std::span<const TokenId> prefix, int vocab_size) {
  for (TokenId t : prefix) {
    if (t < 0 || t >= vocab_size) {
      throw Error(ErrorCode::kInvalidInput, "prefix token " + std::to_string(t) +
                                                " outside the vocabulary");
    }
  }
}
}  // namespace

std::vector<TokenId> SyntheticBackend::TopKFirstTokens(std::span<const TokenId> prefix,
                                                       int k) const {
  if (k < 1 || k > info_.vocab_size) {
    throw Error(ErrorCode::kInvalidInput, "k=" + std::to_string(k) + " outside [1, " +
                                              std::to_string(info_.vocab_size) + "]");
  }
  ValidatePrefix(prefix, info_.vocab_size);
  Automaton automaton(*this, prefix);
  std::vector<TokenId> ranked = automaton.DesignedList();
  if (static_cast<int>(ranked.size()) > k) ranked.resize(static_cast<std::size_t>(k));
  if (static_cast<int>(ranked.size()) < k) {
    std::vector<bool> used(static_cast<std::size_t>(info_.vocab_size), false);
    for (TokenId t : ranked) used[static_cast<std::size_t>(t)] = true;
    for (TokenId t = 0; t < info_.vocab_size && static_cast<int>(ranked.size()) < k; ++t) {
      if (!used[static_cast<std::size_t>(t)]) ranked.push_back(t);
    }
  }
  return ranked;
}

GeneratedSegment SyntheticBackend::Generate(std::span<const TokenId> prefix,
                                            std::optional<TokenId> first,
                                            int max_tokens) const {
  if (max_tokens < 1) throw Error(ErrorCode::kInvalidInput, "max_tokens must be >= 1");
  ValidatePrefix(prefix, info_.vocab_size);
  GeneratedSegment segment;
  if (!first && !prefix.empty() && prefix.back() == info_.eos_token) {
    segment.finished = true;
    return segment;
  }
  if (first) ValidatePrefix(std::span<const TokenId>(&*first, 1), info_.vocab_size);
  Automaton automaton(*this, prefix);
  for (int i = 0; i < max_tokens; ++i) {
    const TokenId t = (i == 0 && first) ? *first : automaton.Expected();
    automaton.Consume(t);
    segment.tokens.push_back(t);
    segment.reps.push_back(MakeRep(automaton.mode, automaton.hash));
    if (t == info_.eos_token) {
      segment.finished = true;
      break;
    }
  }
  segment.text = Decode(segment.tokens);
  return segment;
}

GeneratedSegment SyntheticBackend::GreedyContinue(std::span<const TokenId> prefix,
                                                  int max_tokens) const {
  return Generate(prefix, std::nullopt, max_tokens);
}

GeneratedSegment SyntheticBackend::ForcedContinue(std::span<const TokenId> prefix,
                                                  TokenId first, int max_tokens) const {
  return Generate(prefix, first, max_tokens);
}

std::vector<TokenId> SyntheticBackend::Tokenize(std::string_view text) const {
  return Vocabulary::Default().Tokenize(text);
}

std::string SyntheticBackend::Decode(std::span<const TokenId> tokens) const {
  return Vocabulary::Default().Decode(tokens);
}

SyntheticBackend::Mode SyntheticBackend::ModeAfter(std::span<const TokenId> prefix) const {
  ValidatePrefix(prefix, info_.vocab_size);
  std::vector<Mode> modes;
  Automaton automaton(*this, prefix, &modes);
  return modes.empty() ? Mode::kPrompt : modes.back();
}

std::vector<TextRepresentations> SyntheticBackend::Representations(
    std::span<const std::string> texts) const {
  std::vector<TextRepresentations> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    TextRepresentations tr;
    tr.tokens = Tokenize(text);
    std::vector<Mode> modes;
    std::vector<std::uint64_t> hashes;
    Automaton automaton(*this, tr.tokens, &modes, &hashes);
    for (std::size_t i = 0; i < tr.tokens.size(); ++i) {
      tr.reps.push_back(MakeRep(modes[i], hashes[i]));
    }
    out.push_back(std::move(tr));
  }
  return out;
}

std::vector<LabeledResponse> GenerateLabeledCorpus(const SyntheticBackend& backend,
                                                   std::span<const SyntheticProblem> problems,
                                                   const CorpusOptions& options) {
  std::vector<LabeledResponse> corpus;
  for (const auto& problem : problems) {
    const auto prompt = backend.Tokenize(FormatPrompt(problem.question));
    for (TokenId first : backend.TopKFirstTokens(prompt, options.k)) {
      auto segment = backend.ForcedContinue(prompt, first, options.max_tokens);
      std::vector<TokenId> head = prompt;
      head.push_back(first);
      LabeledResponse response;
      response.label = backend.ModeAfter(head) == SyntheticBackend::Mode::kCot;
      response.tokens = std::move(segment.tokens);
      response.reps = std::move(segment.reps);
      corpus.push_back(std::move(response));
    }
  }
  return corpus;
}

std::string FormatPrompt(std::string_view question) {
  return "Question:" + std::string(question) + "\nAnswer:";
}

}  // namespace probesearch
