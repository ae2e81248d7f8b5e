#include "refinery/stopwords.hpp"

#include <fstream>
#include <map>

#include "refinery/errors.hpp"
#include "refinery/text.hpp"

namespace refinery {

namespace {

// Short high-frequency function-word lists; pass a file for anything more thorough.
const std::map<std::string_view, std::string_view>& builtin_lists() {
    static const std::map<std::string_view, std::string_view> lists = {
        {"eng_Latn",
         "a an and are as at be but by for from had has have he her his i if in into is it its "
         "not of on or our she so that the their them there they this to was we were what when which "
         "who will with would you your"},
        {"eus_Latn",
         "eta da ez du dira baina bat edo hau hori hura ere bere beren zen ziren dago daude izan "
         "egin ere guztiak hemen han non nola zer zein hala ala gabe arte baino behar dute zuen ziren "
         "nik zuk guk haiek dela dituzte"},
        {"cat_Latn",
         "a al als amb de del dels el els en és i la les li lo no o per però que qui se sense "
         "ser seu seva si sobre també un una uns unes va van com més ha han hi ho això aquest "
         "aquesta on molt"},
        {"ces_Latn",
         "a aby ale ani by byl byla bylo co do i jak jako je jeho její jen jsem jsme jsou k kde "
         "když která které který na nebo než o od po pod pro při s se si so ta tak také tam to "
         "tu ty u v ve z za že"},
        {"fin_Latn",
         "ja on ei se että oli ovat mutta kun tai myös niin kuin joka jotka hän he me te sen "
         "sitä siitä tämä tämän nämä mikä mitä jos vain vielä sekä ole olla ollut mukaan jo nyt "
         "kanssa"},
        {"fra_Latn",
         "au aux avec ce ces dans de des du elle en est et eux il ils je la le les leur lui ma "
         "mais me même mes moi mon ne nos notre nous on ou par pas pour qu que qui sa se ses son "
         "sur ta te tu un une vos votre vous été être a y"},
        {"glg_Latn",
         "a á ao aos as co coa con da das de do dos e é en na nas no nos non o os ou para pero "
         "por que se ser seu súa un unha uns unhas xa como máis foi son está ten lle"},
        {"nob_Latn",
         "og i jeg det at en et den til er som på de med han av ikke der så var meg seg men ett "
         "har om vi min mitt ha hadde hun nå over da ved fra du ut sin dem oss opp man kan hans "
         "hvor eller hva skal selv sjøl her alle vil bli ble blitt kunne inn når være kom noen "
         "noe ville dere som deres kun ja etter ned skulle denne for deg si sine sitt mot å"},
        {"spa_Latn",
         "a al como con de del el ella ellos en es esta este fue ha han la las le les lo los más "
         "me mi no nos o para pero por que se ser si sin sobre su sus también te un una uno y ya"},
        {"ukr_Cyrl",
         "і й та а але в у на з із до від по за про для як що це ці цей ця той та не ні же би "
         "бо чи так вже ще він вона вони воно ми ви я його її їх був була було були є бути "
         "також який яка які"},
    };
    return lists;
}

}  // namespace

StopwordSet builtin_stopwords(std::string_view language) {
    StopwordSet set;
    const auto& lists = builtin_lists();
    const auto it = lists.find(language);
    if (it == lists.end()) return set;
    for (auto word : whitespace_tokens(it->second)) set.insert(to_lower(word));
    return set;
}

std::vector<std::string> builtin_stopword_languages() {
    std::vector<std::string> out;
    for (const auto& [lang, words] : builtin_lists()) out.emplace_back(lang);
    return out;
}

StopwordSet load_stopwords(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open stopword file " + path.string());
    StopwordSet set;
    std::string line;
    while (std::getline(in, line)) {
        const auto word = trim(line);
        if (word.empty() || word.front() == '#') continue;
        set.insert(to_lower(word));
    }
    return set;
}

}  // namespace refinery
