// Bilingual chrome strings. Every user-visible key must exist in both
// dictionaries; the test suite enforces parity at build time.

import en from "./locales/en.json";
import de from "./locales/de.json";
import type { Language } from "./types.js";

export const dictionaries: Record<Language, Record<string, string>> = { en, de };

export class I18n {
  constructor(public language: Language = "en") {}

  setLanguage(language: Language): void {
    this.language = language;
  }

  toggle(): Language {
    this.language = this.language === "en" ? "de" : "en";
    return this.language;
  }

  t(key: string): string {
    return dictionaries[this.language][key] ?? key;
  }
}
