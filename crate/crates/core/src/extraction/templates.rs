//! Few-shot extraction templates.
//!
//! The `chinese` template carries the few-shot examples used for the CRUD
//! news corpora; the example text is kept as published.

pub(crate) const INSTRUCTION: &str = "You are an NLP assistant. Given a piece of text, you need to analyze its semantic information and generate a knowledge graph. Your output consists only of triples, considering only the text content, and avoiding newline characters. For example, (entity; relationship; entity),(entity; relationship; entity). The knowledge graph should be comprehensive, covering all information in the text.";

pub(crate) const ENGLISH_EXAMPLES: [(&str, &str); 2] = [
    (
        "Adam Collis is an American filmmaker and actor. He attended the Duke University from 1986 to 1990 and the University of California, Los Angeles from 2007 to 2010. He also studied cinema at the University of Southern California from 1991 to 1997. Collis first work was the assistant director for the Scott Derrickson's short \"Love in the Ruins\" (1995). In 1998, he played \"Crankshaft\" in Eric Koyanagi's \"Hundred Percent\".",
        "(Adam Collis; nationality; American),(Adam Collis; profession; filmmaker),(Adam Collis; profession; actor),(Adam Collis; education; Duke University),(Adam Collis; education; University of California, Los Angeles),(Adam Collis; education; University of Southern California),(Adam Collis; attended; Duke University),(Adam Collis; attended; University of California, Los Angeles),(Adam Collis; attended; University of Southern California),(Adam Collis; first work; assistant director),(Adam Collis; work; \"Love in the Ruins\"),(\"Love in the Ruins\"; director; Scott Derrickson),(Adam Collis; work date; 1995),(Adam Collis; role; \"Crankshaft\"),(\"Hundred Percent\"; director; Eric Koyanagi),(Adam Collis; work; \"Hundred Percent\"),(Adam Collis; work date; 1998)",
    ),
    (
        "Tyler Bates (born June 5, 1965) is an American musician, music producer, and composer for films, television, and video games. Much of his work is in the action and horror film genres, with films like \"Dawn of the Dead, 300, Sucker Punch,\" and \"John Wick.\" He has collaborated with directors like Zack Snyder, Rob Zombie, Neil Marshall, William Friedkin, Scott Derrickson, and James Gunn. With Gunn, he has scored every one of the director's films; including \"Guardians of the Galaxy\", which became one of the highest grossing domestic movies of 2014, and its 2017 sequel. In addition, he is also the lead guitarist of the American rock band Marilyn Manson, and produced its albums \"The Pale Emperor\" and \"Heaven Upside Down\".",
        "(Tyler Bates; birthdate; June 5, 1965),(Tyler Bates; nationality; American),(Tyler Bates; profession; musician),(Tyler Bates; profession; music producer),(Tyler Bates; profession; composer),(Tyler Bates; works in; films),(Tyler Bates; works in; television),(Tyler Bates; works in; video games),(Tyler Bates; specializes in; action and horror film genres),(Tyler Bates; notable films; \"Dawn of the Dead\"),(Tyler Bates; notable films; \"300\"),(Tyler Bates; notable films; \"Sucker Punch\"),(Tyler Bates; notable films; \"John Wick\"),(Tyler Bates; collaborations; Zack Snyder),(Tyler Bates; collaborations; Rob Zombie),(Tyler Bates; collaborations; Neil Marshall),(Tyler Bates; collaborations; William Friedkin),(Tyler Bates; collaborations; Scott Derrickson),(Tyler Bates; collaborations; James Gunn),(Tyler Bates; collaborations; James Gunn),(Tyler Bates; collaborations; James Gunn),(Tyler Bates; scored; \"Guardians of the Galaxy\"),(\"Guardians of the Galaxy\"; release year; 2014),(\"Guardians of the Galaxy\"; grossing; high),(\"Guardians of the Galaxy\"; sequel; released in 2017),(Tyler Bates; lead guitarist; Marilyn Manson),(Marilyn Manson; music albums; \"The Pale Emperor\"),(Marilyn Manson; music albums; \"Heaven Upside Down\")",
    ),
];

pub(crate) const CHINESE_EXAMPLES: [(&str, &str); 2] = [
    (
        "To foster a positive atmosphere regarding children's eye health across society and continually advance comprehensive efforts to prevent and control myopia among children and adolescents, the National Health Commission has decided to launch the nationwide \"Bright Vision Initiative\" – a health promotion campaign for preventing and controlling myopia in children and adolescents. They have also issued the \"Ten Core Knowledge Points for Preventing and Controlling Myopia in Children and Adolescents.\"The theme of this initiative is \"Prioritize Children's Eye Health, Safeguard Children's Clear Vision.\" Emphasizing prevention as the primary approach, it aims to shift the focus to earlier stages, advocating for joint actions by families and society as a whole. The goal is to create a visual-friendly environment that promotes eye care and protection, ensuring children have bright futures.",
        "(The National Health Commission; launches; \"Enlightenment Action\" - health promotion activities for preventing and controlling myopia in children and adolescents), (\"Enlightenment Action\" - health promotion activities for preventing and controlling myopia in children and adolescents; theme; emphasizing children's eye care; guarding children's clear vision \"sight\" field), (The National Health Commission; issues; \"Top Ten Core Knowledge on Preventing and Controlling Myopia in Children and Adolescents\"), (\"Top Ten Core Knowledge on Preventing and Controlling Myopia in Children and Adolescents\"; type; scientific knowledge on preventing and controlling myopia), (The National Health Commission; requires; conducting social publicity and health education),(Social publicity and health education; utilizing; internet, radio and television, newspapers and magazines, posters and bulletin boards, training seminars), (Health education; objective; popularizing scientific knowledge on preventing myopia), (Health education; target; the general public), (Health education; focus; \"Top Ten Core Knowledge on Preventing and Controlling Myopia in Children and Adolescents\"), (Health education; method; innovative educational approaches and media), (Health education; purpose; enhancing specificity, precision, and effectiveness), (Health education; tool; internet media)",
    ),
    (
        "Pushing forward nationwide fitness is a long-term task that requires persistent efforts. Sustaining and stimulating people's enthusiasm for fitness, meeting diverse demands for sports consumption, all require meticulous efforts. In recent years, various regions have taken multiple measures to encourage public participation in sports and fitness, making considerable efforts in this regard. To boost enthusiasm for exercise among the public, some places have come up with innovative ideas. Recently, Xi'an, Shaanxi Province, allocated 5 million yuan in sports electronic consumption vouchers. Citizens who receive these vouchers can use them at 173 sports venues across the city. The issuance of sports consumption vouchers has not only encouraged public participation in fitness activities but also boosted the operation of sports venues, further unleashing the potential for sports consumption. The goal is not just to encourage regular fitness but also to ensure that people know how to exercise effectively.",
        "(National Fitness; nature; long-term task), (National Fitness; requires; persistent efforts), (Stimulating fitness enthusiasm; goal; meeting diverse sports consumption demands), (Stimulating fitness enthusiasm; method; meticulous efforts), (Local actions; initiative; taking multiple measures to encourage public participation in sports and fitness), (Local actions; provision; providing diverse sports services), (Local actions; effort; meticulous efforts), (Xi'an, Shaanxi Province; action; distributing 5 million yuan worth of electronic sports consumption vouchers),",
    ),
];
