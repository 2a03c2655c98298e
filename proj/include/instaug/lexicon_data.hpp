#pragma once

namespace instaug::detail {

// Bundled synonym snapshot: one synset per common object class, lemmas listed
// in their canonical dictionary order. data/lexicon.json ships the identical
// content for deployments that want to swap in a larger vocabulary.
inline constexpr const char* kBuiltinLexiconJson = R"json({
  "airplane": ["airplane", "aeroplane", "plane"],
  "apple": ["apple"],
  "backpack": ["backpack", "knapsack", "rucksack"],
  "banana": ["banana"],
  "baseball bat": ["baseball bat", "lumber"],
  "baseball glove": ["baseball glove", "baseball mitt", "mitt"],
  "bear": ["bear"],
  "bed": ["bed"],
  "bench": ["bench"],
  "bicycle": ["bicycle", "bike", "wheel", "cycle"],
  "bird": ["bird"],
  "boat": ["boat"],
  "book": ["book"],
  "bottle": ["bottle"],
  "bowl": ["bowl"],
  "broccoli": ["broccoli"],
  "bus": ["bus", "autobus", "coach", "omnibus"],
  "cake": ["cake"],
  "car": ["car", "auto", "automobile", "motorcar"],
  "carrot": ["carrot"],
  "cat": ["cat", "true cat"],
  "cell phone": ["cellphone", "mobile phone", "cell phone"],
  "chair": ["chair"],
  "clock": ["clock"],
  "couch": ["sofa", "couch", "lounge"],
  "cow": ["cow", "moo-cow"],
  "cup": ["cup"],
  "dining table": ["dining table", "board"],
  "dog": ["dog", "domestic dog"],
  "donut": ["doughnut", "donut", "sinker"],
  "elephant": ["elephant"],
  "fire hydrant": ["fire hydrant", "fireplug", "plug"],
  "fork": ["fork"],
  "frisbee": ["frisbee"],
  "giraffe": ["giraffe", "camelopard"],
  "hair drier": ["hair dryer", "blow dryer"],
  "handbag": ["bag", "handbag", "pocketbook", "purse"],
  "horse": ["horse"],
  "hot dog": ["hotdog", "hot dog", "red hot"],
  "keyboard": ["keyboard"],
  "kite": ["kite"],
  "knife": ["knife"],
  "laptop": ["laptop", "laptop computer"],
  "microwave": ["microwave", "microwave oven"],
  "motorcycle": ["motorcycle", "bike"],
  "mouse": ["mouse", "computer mouse"],
  "orange": ["orange"],
  "oven": ["oven"],
  "parking meter": ["parking meter"],
  "person": ["person", "individual", "someone", "somebody"],
  "pizza": ["pizza", "pizza pie"],
  "potted plant": ["potted plant", "houseplant"],
  "refrigerator": ["refrigerator", "icebox"],
  "remote": ["remote control", "remote"],
  "sandwich": ["sandwich"],
  "scissors": ["scissors", "pair of scissors"],
  "sheep": ["sheep"],
  "sink": ["sink"],
  "skateboard": ["skateboard"],
  "skis": ["ski"],
  "snowboard": ["snowboard"],
  "sofa": ["sofa", "couch", "lounge"],
  "spoon": ["spoon"],
  "sports ball": ["ball"],
  "stop sign": ["stop sign"],
  "suitcase": ["suitcase", "traveling bag", "grip"],
  "surfboard": ["surfboard"],
  "teddy bear": ["teddy", "teddy bear"],
  "tennis racket": ["tennis racket", "tennis racquet"],
  "tie": ["necktie", "tie"],
  "toaster": ["toaster"],
  "toilet": ["toilet", "commode"],
  "toothbrush": ["toothbrush"],
  "traffic light": ["traffic light", "traffic signal", "stoplight"],
  "train": ["train", "railroad train"],
  "truck": ["truck", "motortruck"],
  "tv": ["television", "tv", "television set"],
  "umbrella": ["umbrella"],
  "vase": ["vase"],
  "wine glass": ["wineglass", "wine glass"]
})json";

}  // namespace instaug::detail
